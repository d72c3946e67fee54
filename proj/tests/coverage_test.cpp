#include <gtest/gtest.h>

#include "protofuzz/coverage.hpp"
#include "protofuzz/error.hpp"
#include "protofuzz/rng.hpp"

namespace protofuzz {
namespace {

// Bit-by-bit re-evaluation of the code-region formula.
std::size_t code_index_oracle(std::uint32_t prev, std::uint32_t cur, std::size_t map, std::size_t shift) {
  std::uint64_t x = 0;
  const std::uint64_t halved = prev / 2;
  for (int b = 0; b < 32; ++b) {
    const bool bit = (((cur >> b) & 1u) != 0) != (((halved >> b) & 1u) != 0);
    if (bit) x += std::uint64_t{1} << b;
  }
  const std::uint64_t span = map - shift;
  return static_cast<std::size_t>(x - span * (x / span) + shift);
}

std::size_t state_index_oracle(std::uint32_t prev, std::uint32_t cur, std::uint32_t state_size,
                               std::size_t shift) {
  unsigned __int128 v = 0;
  for (std::uint32_t i = 0; i < state_size; ++i) v += prev;
  v += cur;
  return static_cast<std::size_t>(v - shift * (v / shift));
}

// Bucket classes spelled out from the hit-count ranges.
std::uint8_t bucket_oracle(unsigned count) {
  if (count == 0) return 0;
  if (count == 1) return 1;
  if (count == 2) return 2;
  if (count == 3) return 4;
  if (count <= 7) return 8;
  if (count <= 15) return 16;
  if (count <= 31) return 32;
  if (count <= 127) return 64;
  return 128;
}

TEST(BitmapFormula, IndicesMatchOracleAndRegionsAreDisjoint) {
  Rng rng(2024);
  const BitmapGeometry g;
  for (int i = 0; i < 20000; ++i) {
    const auto prev = static_cast<std::uint32_t>(rng.next());
    const auto cur = static_cast<std::uint32_t>(rng.next());
    const std::size_t ci = code_index(prev, cur, g.map_size, g.shift_size);
    ASSERT_EQ(ci, code_index_oracle(prev, cur, g.map_size, g.shift_size));
    ASSERT_GE(ci, g.shift_size);
    ASSERT_LT(ci, g.map_size);
    const auto sp = static_cast<std::uint32_t>(rng.below(g.state_size));
    const auto sc = static_cast<std::uint32_t>(rng.below(g.state_size));
    const std::size_t si = state_index(sp, sc, g.state_size, g.shift_size);
    ASSERT_EQ(si, state_index_oracle(sp, sc, g.state_size, g.shift_size));
    ASSERT_LT(si, g.shift_size);
  }
}

TEST(BitmapFormula, DistinctStatePairsGetDistinctIndicesWithinStateSize) {
  const BitmapGeometry g;
  std::vector<bool> seen(g.shift_size, false);
  for (std::uint32_t p = 0; p < 64; ++p) {
    for (std::uint32_t c = 0; c < g.state_size; ++c) {
      const std::size_t i = state_index(p, c, g.state_size, g.shift_size);
      ASSERT_FALSE(seen[i]);
      seen[i] = true;
    }
  }
}

TEST(Bucket, MatchesRangeTableForEveryCount) {
  for (unsigned c = 0; c < 256; ++c) {
    EXPECT_EQ(bucket(static_cast<std::uint8_t>(c)), bucket_oracle(c)) << c;
  }
}

TEST(Geometry, Validation) {
  EXPECT_NO_THROW(BitmapGeometry{}.validate());
  EXPECT_NO_THROW((BitmapGeometry{1u << 16, 0, 256}.validate()));
  EXPECT_THROW((BitmapGeometry{1000, 0, 256}.validate()), ConfigError);
  EXPECT_THROW((BitmapGeometry{1u << 16, 1u << 16, 256}.validate()), ConfigError);
  EXPECT_THROW((BitmapGeometry{1u << 16, 3000, 256}.validate()), ConfigError);
}

TEST(TraceMap, SaturatesAndClearsTouchedEntries) {
  TraceMap t(64);
  for (int i = 0; i < 300; ++i) t.bump(5);
  t.bump(9);
  EXPECT_EQ(t.at(5), 255);
  ASSERT_EQ(t.touched().size(), 2u);
  EXPECT_EQ(t.touched()[0], 5u);
  t.clear();
  EXPECT_EQ(t.at(5), 0);
  EXPECT_TRUE(t.touched().empty());
}

TEST(RecordTransition, NoStateRegionMeansNoEntry) {
  const BitmapGeometry g{1u << 16, 0, 256};
  TraceMap t(g.map_size);
  record_transition(t, g, kInitialState, StateId{1});
  EXPECT_TRUE(t.touched().empty());
}

TEST(Classify, NewBitsThenNewBucketThenNothing) {
  const BitmapGeometry g;
  CoverageBitmap bm(g);
  TraceMap t(g.map_size);
  t.bump(g.shift_size + 7);
  CoverageDelta d = bm.classify(t, FeedbackRegions::kBoth);
  EXPECT_TRUE(d.new_bits);
  EXPECT_TRUE(d.new_code_bits);
  EXPECT_FALSE(d.new_state_bits);

  d = bm.classify(t, FeedbackRegions::kBoth);
  EXPECT_FALSE(d.interesting());

  t.bump(g.shift_size + 7);  // count 2: a new bucket
  d = bm.classify(t, FeedbackRegions::kBoth);
  EXPECT_FALSE(d.new_bits);
  EXPECT_TRUE(d.new_bucket);
}

TEST(Classify, DisabledRegionIsNeverRead) {
  const BitmapGeometry g;
  CoverageBitmap bm(g);
  TraceMap t(g.map_size);
  record_transition(t, g, kInitialState, StateId{1});
  record_edge(t, g, {1, 2});

  EXPECT_FALSE(bm.classify(t, FeedbackRegions::kNone).interesting());
  EXPECT_EQ(bm.audit().state_reads + bm.audit().code_reads, 0u);

  CoverageDelta d = bm.classify(t, FeedbackRegions::kCode);
  EXPECT_TRUE(d.new_code_bits);
  EXPECT_FALSE(d.new_state_bits);
  EXPECT_EQ(bm.audit().state_reads, 0u);

  d = bm.classify(t, FeedbackRegions::kState);
  EXPECT_TRUE(d.new_state_bits);
  EXPECT_EQ(bm.audit().code_reads, 1u);
  // The code bit is already known; the state bit was untouched until now.
  EXPECT_EQ(bm.virgin()[state_index(0, 1, g.state_size, g.shift_size)], 0xfe);
}

TEST(Classify, SizeMismatchThrows) {
  CoverageBitmap bm;
  TraceMap small(16);
  EXPECT_THROW(bm.classify(small, FeedbackRegions::kBoth), InvalidArgument);
  EXPECT_THROW(bm.accumulate(small), InvalidArgument);
}

TEST(Accumulate, CountsEntriesPerRegionOnce) {
  const BitmapGeometry g;
  CoverageBitmap bm(g);
  TraceMap t(g.map_size);
  record_edge(t, g, {0, 10});
  record_edge(t, g, {10, 20});
  record_transition(t, g, kInitialState, StateId{1});
  bm.accumulate(t);
  bm.accumulate(t);
  EXPECT_EQ(bm.code_entries_hit(), 2u);
  EXPECT_EQ(bm.state_entries_hit(), 1u);
}

}  // namespace
}  // namespace protofuzz
