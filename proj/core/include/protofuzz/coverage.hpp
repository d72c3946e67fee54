#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "protofuzz/message.hpp"

namespace protofuzz {

inline constexpr std::size_t kDefaultMapSize = 1u << 16;
inline constexpr std::size_t kDefaultShiftSize = kDefaultMapSize / 2;
inline constexpr std::uint32_t kDefaultStateSize = 256;

/// Layout of the shared bitmap: [0, shift_size) holds state transitions,
/// [shift_size, map_size) holds code edges.
struct BitmapGeometry {
  std::size_t map_size = kDefaultMapSize;
  std::size_t shift_size = kDefaultShiftSize;
  std::uint32_t state_size = kDefaultStateSize;

  /// Throws ConfigError unless both sizes are powers of two (shift may be 0)
  /// and shift_size < map_size.
  void validate() const;
};

/// Branch keys of the source and destination basic blocks.
struct EdgeKey {
  std::uint32_t prev_loc = 0;
  std::uint32_t cur_loc = 0;
  friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};

/// (cur ^ (prev >> 1)) % (map_size - shift_size) + shift_size.
constexpr std::size_t code_index(std::uint32_t prev_loc, std::uint32_t cur_loc,
                                 std::size_t map_size, std::size_t shift_size) {
  const std::size_t code_span = map_size - shift_size;
  return static_cast<std::size_t>(cur_loc ^ (prev_loc >> 1)) % code_span + shift_size;
}

/// (prev_state * state_size + cur_state) % shift_size. shift_size must be > 0.
constexpr std::size_t state_index(std::uint32_t prev_state, std::uint32_t cur_state,
                                  std::uint32_t state_size, std::size_t shift_size) {
  const std::uint64_t raw = static_cast<std::uint64_t>(prev_state) * state_size + cur_state;
  return static_cast<std::size_t>(raw % shift_size);
}

/// AFL hit-count class: 0,1,2,3,4-7,8-15,16-31,32-127,128-255 map to
/// 0,1,2,4,8,16,32,64,128.
std::uint8_t bucket(std::uint8_t count) noexcept;

/// Per-execution hit counters. Tracks touched entries so clearing and
/// classification cost is proportional to what one run actually hit.
class TraceMap {
 public:
  explicit TraceMap(std::size_t size = kDefaultMapSize);

  /// Saturating increment (stops at 255).
  void bump(std::size_t index);
  std::uint8_t at(std::size_t index) const { return counts_[index]; }
  std::size_t size() const { return counts_.size(); }
  std::span<const std::uint8_t> bytes() const { return counts_; }
  /// Indices with a nonzero counter, in first-hit order.
  std::span<const std::uint32_t> touched() const { return touched_; }
  void clear();

 private:
  std::vector<std::uint8_t> counts_;
  std::vector<std::uint32_t> touched_;
};

void record_edge(TraceMap& trace, const BitmapGeometry& geometry, EdgeKey key);
void record_transition(TraceMap& trace, const BitmapGeometry& geometry, StateId prev,
                       StateId cur);

/// Which bitmap regions a campaign consults when deciding novelty.
enum class FeedbackRegions : std::uint8_t { kNone = 0, kState = 1, kCode = 2, kBoth = 3 };

constexpr bool includes_state(FeedbackRegions r) {
  return (static_cast<unsigned>(r) & 1u) != 0;
}
constexpr bool includes_code(FeedbackRegions r) {
  return (static_cast<unsigned>(r) & 2u) != 0;
}

struct CoverageDelta {
  /// Some entry was hit for the first time.
  bool new_bits = false;
  /// Some already-hit entry reached a new hit-count bucket.
  bool new_bucket = false;
  bool new_state_bits = false;
  bool new_code_bits = false;

  bool interesting() const { return new_bits || new_bucket; }
};

/// Number of trace entries each region had read during classification.
struct RegionAudit {
  std::uint64_t state_reads = 0;
  std::uint64_t code_reads = 0;
};

/// Campaign-wide coverage: the virgin map used for novelty plus a
/// cumulative map of everything any execution has hit.
class CoverageBitmap {
 public:
  explicit CoverageBitmap(BitmapGeometry geometry = {});

  const BitmapGeometry& geometry() const { return geometry_; }

  /// Buckets `trace`, reports novelty against the virgin map inside the
  /// enabled regions and clears the newly seen bits. Entries outside the
  /// enabled regions are never read. Throws InvalidArgument on size mismatch.
  CoverageDelta classify(const TraceMap& trace, FeedbackRegions regions);

  /// Folds a trace into the cumulative map (all regions).
  void accumulate(const TraceMap& trace);

  std::size_t code_entries_hit() const { return code_hit_; }
  std::size_t state_entries_hit() const { return state_hit_; }
  std::span<const std::uint8_t> virgin() const { return virgin_; }
  const RegionAudit& audit() const { return audit_; }

 private:
  BitmapGeometry geometry_;
  std::vector<std::uint8_t> virgin_;
  std::vector<std::uint8_t> cumulative_;
  std::size_t code_hit_ = 0;
  std::size_t state_hit_ = 0;
  RegionAudit audit_;
};

}  // namespace protofuzz
