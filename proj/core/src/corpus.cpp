#include "protofuzz/corpus.hpp"

#include <algorithm>

namespace protofuzz {
namespace {

bool index_enabled(std::uint32_t index, const BitmapGeometry& geometry, FeedbackRegions regions) {
  return index < geometry.shift_size ? includes_state(regions) : includes_code(regions);
}

std::uint64_t fav_factor(const SeedEntry& e) {
  return e.exec_time_us * std::max<std::uint64_t>(1, e.seq.length());
}

}  // namespace

TraceDigest digest_trace(const TraceMap& trace, const BitmapGeometry& geometry,
                         FeedbackRegions regions) {
  TraceDigest d;
  for (std::uint32_t i : trace.touched()) {
    if (index_enabled(i, geometry, regions)) d.indices.push_back(i);
  }
  std::sort(d.indices.begin(), d.indices.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  for (std::uint32_t i : d.indices) {
    mix(i);
    mix(bucket(trace.at(i)));
  }
  d.hash = h;
  return d;
}

Corpus::Corpus(std::size_t map_size) : top_rated_(map_size, kNone) {}

std::size_t Corpus::add(SeedEntry entry) {
  const auto id = static_cast<std::uint32_t>(entries_.size());
  total_exec_us_ += static_cast<double>(entry.exec_time_us);
  total_bitmap_ += static_cast<double>(entry.bitmap_size());
  const std::uint64_t factor = fav_factor(entry);
  for (std::uint32_t i : entry.trace_indices) {
    std::uint32_t& top = top_rated_[i];
    if (top == kNone || factor < fav_factor(entries_[top])) {
      top = id;
      dirty_ = true;
    }
  }
  entries_.push_back(std::move(entry));
  return id;
}

void Corpus::cull() {
  if (!dirty_) return;
  dirty_ = false;
  std::vector<bool> covered(top_rated_.size(), false);
  for (SeedEntry& e : entries_) e.favored = false;
  favored_count_ = 0;
  for (std::size_t i = 0; i < top_rated_.size(); ++i) {
    const std::uint32_t top = top_rated_[i];
    if (top == kNone || covered[i]) continue;
    SeedEntry& e = entries_[top];
    for (std::uint32_t j : e.trace_indices) covered[j] = true;
    if (!e.favored) {
      e.favored = true;
      ++favored_count_;
    }
  }
}

double Corpus::average_exec_us() const {
  return entries_.empty() ? 0.0 : total_exec_us_ / static_cast<double>(entries_.size());
}

double Corpus::average_bitmap_size() const {
  return entries_.empty() ? 0.0 : total_bitmap_ / static_cast<double>(entries_.size());
}

}  // namespace protofuzz
