#include "protofuzz/coverage.hpp"

#include <array>
#include <bit>

#include "protofuzz/error.hpp"

namespace protofuzz {
namespace {

constexpr std::array<std::uint8_t, 256> make_bucket_table() {
  std::array<std::uint8_t, 256> t{};
  for (unsigned c = 0; c < 256; ++c) {
    std::uint8_t b = 0;
    if (c == 0) b = 0;
    else if (c == 1) b = 1;
    else if (c == 2) b = 2;
    else if (c == 3) b = 4;
    else if (c <= 7) b = 8;
    else if (c <= 15) b = 16;
    else if (c <= 31) b = 32;
    else if (c <= 127) b = 64;
    else b = 128;
    t[c] = b;
  }
  return t;
}

constexpr auto kBucketTable = make_bucket_table();

}  // namespace

void BitmapGeometry::validate() const {
  if (!std::has_single_bit(map_size)) throw ConfigError("MAP_SIZE must be a power of two");
  if (shift_size != 0 && !std::has_single_bit(shift_size)) {
    throw ConfigError("SHIFT_SIZE must be a power of two or 0");
  }
  if (shift_size >= map_size) throw ConfigError("SHIFT_SIZE must be smaller than MAP_SIZE");
  if (state_size < 2) throw ConfigError("STATE_SIZE must be at least 2");
}

std::uint8_t bucket(std::uint8_t count) noexcept { return kBucketTable[count]; }

TraceMap::TraceMap(std::size_t size) : counts_(size, 0) { touched_.reserve(256); }

void TraceMap::bump(std::size_t index) {
  std::uint8_t& c = counts_.at(index);
  if (c == 0) touched_.push_back(static_cast<std::uint32_t>(index));
  if (c != 255) ++c;
}

void TraceMap::clear() {
  for (std::uint32_t i : touched_) counts_[i] = 0;
  touched_.clear();
}

void record_edge(TraceMap& trace, const BitmapGeometry& geometry, EdgeKey key) {
  trace.bump(code_index(key.prev_loc, key.cur_loc, geometry.map_size, geometry.shift_size));
}

void record_transition(TraceMap& trace, const BitmapGeometry& geometry, StateId prev,
                       StateId cur) {
  if (geometry.shift_size == 0) return;  // code-only layout has no state region
  trace.bump(state_index(prev.value, cur.value, geometry.state_size, geometry.shift_size));
}

CoverageBitmap::CoverageBitmap(BitmapGeometry geometry)
    : geometry_(geometry),
      virgin_(geometry.map_size, 0xff),
      cumulative_(geometry.map_size, 0) {
  geometry_.validate();
}

CoverageDelta CoverageBitmap::classify(const TraceMap& trace, FeedbackRegions regions) {
  if (trace.size() != virgin_.size()) {
    throw InvalidArgument("classify: trace map size does not match bitmap");
  }
  CoverageDelta delta;
  const bool use_state = includes_state(regions);
  const bool use_code = includes_code(regions);
  for (std::uint32_t index : trace.touched()) {
    const bool in_state = index < geometry_.shift_size;
    if (in_state ? !use_state : !use_code) continue;
    (in_state ? audit_.state_reads : audit_.code_reads)++;
    const std::uint8_t cls = bucket(trace.at(index));
    std::uint8_t& v = virgin_[index];
    if ((cls & v) == 0) continue;
    if (v == 0xff) {
      delta.new_bits = true;
    } else {
      delta.new_bucket = true;
    }
    (in_state ? delta.new_state_bits : delta.new_code_bits) = true;
    v &= static_cast<std::uint8_t>(~cls);
  }
  return delta;
}

void CoverageBitmap::accumulate(const TraceMap& trace) {
  if (trace.size() != cumulative_.size()) {
    throw InvalidArgument("accumulate: trace map size does not match bitmap");
  }
  for (std::uint32_t index : trace.touched()) {
    std::uint8_t& c = cumulative_[index];
    if (c == 0) (index < geometry_.shift_size ? state_hit_ : code_hit_)++;
    c |= bucket(trace.at(index));
  }
}

}  // namespace protofuzz
