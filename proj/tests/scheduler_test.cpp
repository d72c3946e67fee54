#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "protofuzz/error.hpp"
#include "protofuzz/scheduler.hpp"
#include "test_support.hpp"

namespace protofuzz {
namespace {

using testing::seq_of;

Ipsm chain(std::initializer_list<std::uint32_t> keys) {
  Ipsm ipsm;
  std::vector<StateId> seq;
  for (std::uint32_t k : keys) seq.push_back(StateId{k});
  ipsm.update(seq);
  return ipsm;
}

SeedEntry seed(std::uint64_t exec_us, std::size_t len, std::size_t distinct) {
  SeedEntry e;
  e.seq = seq_of({Bytes(len, 'a')});
  e.exec_time_us = exec_us;
  e.distinct_states = distinct;
  return e;
}

TEST(StateAlgo, ParsesNamesAndNumbers) {
  EXPECT_EQ(parse_state_algo("favor"), StateAlgo::kFavor);
  EXPECT_EQ(parse_state_algo("3"), StateAlgo::kFavor);
  EXPECT_EQ(parse_state_algo("1"), StateAlgo::kRandom);
  EXPECT_EQ(parse_state_algo("round-robin"), StateAlgo::kRoundRobin);
  EXPECT_EQ(parse_state_algo("2"), StateAlgo::kRoundRobin);
  EXPECT_THROW(parse_state_algo("4"), ConfigError);
}

TEST(FavorScore, MatchesFormula) {
  EXPECT_DOUBLE_EQ(favor_score(StateStats{}), 1.0);
  EXPECT_DOUBLE_EQ(favor_score(StateStats{9, 3, 1}), 2.0 / 40.0);
}

TEST(StateSelector, FavorSamplesProportionallyToScore) {
  Rng rng(11);
  int a_hits = 0;
  constexpr int kDraws = 20000;
  for (int i = 0; i < kDraws; ++i) {
    Ipsm ipsm = chain({1, 2});
    ipsm.stats(StateId{2}) = StateStats{9, 3, 1};
    StateSelector sel;
    a_hits += sel.choose(ipsm, StateAlgo::kFavor, rng) == StateId{1};
  }
  const double expected = 1.0 / (1.0 + 2.0 / 40.0);
  EXPECT_NEAR(expected, 0.952, 5e-4);
  EXPECT_NEAR(static_cast<double>(a_hits) / kDraws, expected, 0.01);
}

TEST(StateSelector, SingleStateUnderEveryAlgorithm) {
  for (StateAlgo algo : {StateAlgo::kFavor, StateAlgo::kRandom, StateAlgo::kRoundRobin}) {
    Ipsm ipsm = chain({5});
    StateSelector sel;
    Rng rng(1);
    for (int i = 0; i < 5; ++i) EXPECT_EQ(sel.choose(ipsm, algo, rng), StateId{5});
    EXPECT_EQ(ipsm.stats(StateId{5}).selected_count, 5u);
  }
}

TEST(StateSelector, RoundRobinCyclesInDiscoveryOrder) {
  Ipsm ipsm = chain({1, 2, 3});
  StateSelector sel;
  Rng rng(1);
  std::vector<std::uint32_t> got;
  for (int i = 0; i < 6; ++i) got.push_back(sel.choose(ipsm, StateAlgo::kRoundRobin, rng).value);
  EXPECT_EQ(got, (std::vector<std::uint32_t>{1, 2, 3, 1, 2, 3}));
}

TEST(StateSelector, EmptyMachineIsAnError) {
  Ipsm ipsm;
  StateSelector sel;
  Rng rng(1);
  EXPECT_THROW(sel.choose(ipsm, StateAlgo::kFavor, rng), InvalidArgument);
}

TEST(StateSelector, FixedSeedIsReproducible) {
  auto draw = [] {
    Ipsm ipsm = chain({1, 2, 3, 4});
    StateSelector sel;
    Rng rng(99);
    std::vector<std::uint32_t> out;
    for (int i = 0; i < 200; ++i) out.push_back(sel.choose(ipsm, StateAlgo::kFavor, rng).value);
    return out;
  };
  EXPECT_EQ(draw(), draw());
}

// Property: one more path for a state strictly raises its selection
// probability when the others are held fixed.
TEST(StateSelector, ExtraPathRaisesSelectionProbability) {
  Rng gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<StateStats> stats(2 + gen.below(5));
    for (auto& s : stats) s = StateStats{gen.below(50), gen.below(50), gen.below(50)};
    auto prob0 = [&](const std::vector<StateStats>& v) {
      double total = 0;
      for (const auto& s : v) total += favor_score(s);
      return favor_score(v[0]) / total;
    };
    const double before = prob0(stats);
    auto more = stats;
    ++more[0].paths_discovered;
    EXPECT_GT(prob0(more), before);
  }
}

TEST(SequenceSelection, PrefersSeedReachingMoreStates) {
  Corpus corpus;
  corpus.add(seed(100, 10, 2));
  corpus.add(seed(100, 10, 3));
  Ipsm ipsm = chain({1});
  ipsm.register_seed(StateId{1}, 0);
  ipsm.register_seed(StateId{1}, 1);
  EXPECT_EQ(choose_sequence_to_state(corpus, ipsm, StateId{1}), 1u);
  EXPECT_DOUBLE_EQ(sequence_weight(corpus.at(0)), 100.0 * 10 / 3);
}

TEST(SequenceSelection, TiesGoToLowerIndexAndMissingStateGivesNothing) {
  Corpus corpus;
  corpus.add(seed(100, 10, 2));
  corpus.add(seed(100, 10, 2));
  Ipsm ipsm = chain({1, 2});
  ipsm.register_seed(StateId{1}, 1);
  ipsm.register_seed(StateId{1}, 0);
  EXPECT_EQ(choose_sequence_to_state(corpus, ipsm, StateId{1}), 0u);
  EXPECT_EQ(choose_sequence_to_state(corpus, ipsm, StateId{2}), std::nullopt);
  ipsm.register_seed(StateId{2}, 1);
  EXPECT_EQ(choose_sequence_to_state(corpus, ipsm, StateId{2}), 1u);
}

TEST(QueueWalker, VisitsAllBeforeRepeating) {
  Corpus corpus;
  for (int i = 0; i < 3; ++i) corpus.add(seed(100, 10, 1));
  QueueWalker walker;
  Rng rng(1);
  std::vector<std::size_t> got;
  for (int i = 0; i < 6; ++i) got.push_back(walker.next(corpus, rng));
  EXPECT_EQ(got, (std::vector<std::size_t>{0, 1, 2, 0, 1, 2}));
}

TEST(QueueWalker, EmptyQueueIsAnError) {
  Corpus corpus;
  QueueWalker walker;
  Rng rng(1);
  EXPECT_THROW(walker.next(corpus, rng), InvalidArgument);
}

TEST(QueueWalker, NonFavoredEntriesAreSkippedAtTheConfiguredRate) {
  // Entry 0 covers index 7 cheaply and becomes favored; entry 1 only covers
  // the same index at a higher cost.
  Corpus corpus;
  SeedEntry fast = seed(10, 4, 1);
  fast.trace_indices = {7};
  SeedEntry slow = seed(1000, 40, 1);
  slow.trace_indices = {7};
  corpus.add(fast);
  corpus.add(slow);
  corpus.cull();
  ASSERT_TRUE(corpus.at(0).favored);
  ASSERT_FALSE(corpus.at(1).favored);

  QueueWalker walker;
  Rng rng(3);
  // Every arrival at entry 1 is a skip trial. Count arrivals as visits to 0
  // (each visit to 0 is followed by exactly one arrival at 1).
  constexpr int kTrials = 10000;
  int favored_visits = 0;
  int non_favored_visits = 0;
  while (favored_visits < kTrials) {
    (walker.next(corpus, rng) == 0 ? favored_visits : non_favored_visits)++;
  }
  const double skip_rate = 1.0 - static_cast<double>(non_favored_visits) / kTrials;
  EXPECT_NEAR(skip_rate, QueueWalker::kSkipNonFavored, 0.03);
}

TEST(Energy, AverageSeedGetsBaseScore) {
  SeedEntry e = seed(200, 10, 1);
  e.trace_indices = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(perf_score(e, 200, 4), 100.0);
  EXPECT_EQ(energy(e, 200, 4), 256u);
}

TEST(Energy, FactorTables) {
  EXPECT_DOUBLE_EQ(speed_factor(4.0), 0.25);
  EXPECT_DOUBLE_EQ(speed_factor(0.25), 3.0);
  EXPECT_DOUBLE_EQ(speed_factor(1.0), 1.0);
  EXPECT_DOUBLE_EQ(bitmap_factor(0.2), 0.25);
  EXPECT_DOUBLE_EQ(bitmap_factor(4.0), 3.0);
  EXPECT_DOUBLE_EQ(depth_factor(0), 1.0);
  EXPECT_DOUBLE_EQ(depth_factor(20), 4.0);

  SeedEntry slow = seed(800, 10, 1);
  slow.trace_indices = {1, 2};
  EXPECT_DOUBLE_EQ(perf_score(slow, 200, 2), 25.0);
}

TEST(Energy, TrialsAlwaysWithinBounds) {
  Rng rng(17);
  for (int i = 0; i < 10000; ++i) {
    SeedEntry e = seed(1 + rng.below(1'000'000), 1 + rng.below(100), rng.below(20));
    e.trace_indices.resize(rng.below(500));
    e.seq.meta.depth = static_cast<std::uint32_t>(rng.below(40));
    const double avg_exec = static_cast<double>(1 + rng.below(1'000'000));
    const double avg_bitmap = static_cast<double>(rng.below(500));
    const std::uint32_t t = energy(e, avg_exec, avg_bitmap);
    ASSERT_GE(t, 8u);
    ASSERT_LE(t, 1024u);
  }
}

TEST(PickMode, SwitchesAfterTheGap) {
  EXPECT_EQ(pick_mode(0, 0, 60), SelectionMode::kQueueDriven);
  EXPECT_EQ(pick_mode(60'000'000, 0, 60), SelectionMode::kQueueDriven);
  EXPECT_EQ(pick_mode(60'000'001, 0, 60), SelectionMode::kStateDriven);
  EXPECT_EQ(pick_mode(5, 10, 60), SelectionMode::kQueueDriven);
}

}  // namespace
}  // namespace protofuzz
