#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "protofuzz/coverage.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz {

enum class SeedOrigin { kInitial, kMutated };

struct SeedEntry {
  MessageSequence seq;
  std::uint64_t exec_time_us = 0;
  /// FNV-1a over the bucketed trace entries in the enabled regions.
  std::uint64_t trace_hash = 0;
  bool favored = false;
  /// Campaign clock (microseconds) when the entry was added.
  std::uint64_t found_at_us = 0;
  SeedOrigin origin = SeedOrigin::kInitial;
  /// Trace indices hit in the enabled regions, ascending.
  std::vector<std::uint32_t> trace_indices;
  std::size_t distinct_states = 0;
  bool was_fuzzed = false;

  std::size_t bitmap_size() const { return trace_indices.size(); }
};

/// Summary of a trace restricted to the regions a campaign consults.
struct TraceDigest {
  std::vector<std::uint32_t> indices;
  std::uint64_t hash = 0;
};

TraceDigest digest_trace(const TraceMap& trace, const BitmapGeometry& geometry,
                         FeedbackRegions regions);

/// The seed queue plus the per-entry bookkeeping of AFL's favored-entry
/// scheme: every bitmap index remembers the cheapest entry hitting it
/// (exec_time x length), and culling marks a minimal set of those entries
/// covering every index seen so far.
class Corpus {
 public:
  explicit Corpus(std::size_t map_size = kDefaultMapSize);

  std::size_t add(SeedEntry entry);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  SeedEntry& at(std::size_t i) { return entries_.at(i); }
  const SeedEntry& at(std::size_t i) const { return entries_.at(i); }
  std::span<const SeedEntry> entries() const { return entries_; }

  /// Recomputes favored flags if any entry changed the top-rated table.
  void cull();
  std::size_t favored_count() const { return favored_count_; }

  double average_exec_us() const;
  double average_bitmap_size() const;

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  std::vector<SeedEntry> entries_;
  std::vector<std::uint32_t> top_rated_;
  bool dirty_ = false;
  std::size_t favored_count_ = 0;
  double total_exec_us_ = 0;
  double total_bitmap_ = 0;
};

}  // namespace protofuzz
