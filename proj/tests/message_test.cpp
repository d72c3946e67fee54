#include <gtest/gtest.h>

#include "protofuzz/error.hpp"
#include "protofuzz/message.hpp"
#include "protofuzz/rng.hpp"
#include "test_support.hpp"

namespace protofuzz {
namespace {

using testing::ids;
using testing::seq_of;

TEST(Message, RejectsEmptyBytes) {
  EXPECT_THROW(Message(""), InvalidArgument);
  EXPECT_EQ(Message("NOOP\r\n").size(), 6u);
}

TEST(MessageSequence, FromMessagesBuildsContiguousRegions) {
  const MessageSequence seq = seq_of({"USER foo\r\n", "PASS foo\r\n", "QUIT\r\n"});
  ASSERT_EQ(seq.message_count(), 3u);
  EXPECT_EQ(seq.buffer, "USER foo\r\nPASS foo\r\nQUIT\r\n");
  EXPECT_EQ(seq.regions[1].start, 10u);
  EXPECT_EQ(seq.regions[1].end, 20u);
  EXPECT_EQ(seq.message_view(2), "QUIT\r\n");
  EXPECT_NO_THROW(validate(seq));
}

TEST(MessageSequence, FromMessagesRejectsEmptyMessage) {
  EXPECT_THROW(seq_of({"A", ""}), InvalidArgument);
}

TEST(MessageSequence, MessagesOfRoundTrips) {
  const MessageSequence seq = seq_of({"a", "bc", "def"});
  const std::vector<Message> ms = messages_of(seq);
  ASSERT_EQ(ms.size(), 3u);
  EXPECT_EQ(ms[2].bytes(), "def");
  EXPECT_EQ(MessageSequence::from_messages(std::span<const Message>(ms)).buffer, seq.buffer);
}

TEST(Validate, DetectsEachViolation) {
  MessageSequence seq = seq_of({"ab", "cd"});
  MessageSequence gap = seq;
  gap.regions[1].start = 3;
  EXPECT_THROW(validate(gap), InvalidArgument);

  MessageSequence uncovered = seq;
  uncovered.buffer += "x";
  EXPECT_THROW(validate(uncovered), InvalidArgument);

  MessageSequence empty_region = seq;
  empty_region.regions[0].end = 0;
  empty_region.regions[1].start = 0;
  EXPECT_THROW(validate(empty_region), InvalidArgument);

  MessageSequence shrinking = seq;
  shrinking.regions[0].states_observed = ids({1, 2});
  shrinking.regions[1].states_observed = ids({1});
  EXPECT_THROW(validate(shrinking), InvalidArgument);

  EXPECT_THROW(validate(MessageSequence{}), InvalidArgument);
}

TEST(Reindex, ShiftsLaterRegions) {
  MessageSequence seq = seq_of({"ab", "cd", "ef"});
  seq.buffer.insert(3, "XYZ");
  const MessageSequence out = reindex(seq, 1, 3);
  EXPECT_EQ(out.message_view(1), "cXYZd");
  EXPECT_EQ(out.message_view(2), "ef");
  EXPECT_NO_THROW(validate(out));
}

TEST(Reindex, RejectsEmptyingARegionAndBadIndex) {
  const MessageSequence seq = seq_of({"ab", "cd"});
  EXPECT_THROW(reindex(seq, 0, -2), InvalidArgument);
  EXPECT_THROW(reindex(seq, 2, 1), InvalidArgument);
}

// Grow and shrink random regions of a random sequence; every result must
// still partition the buffer.
TEST(Reindex, PropertyContiguityAfterRandomEdits) {
  Rng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Bytes> msgs;
    const std::size_t n = 1 + rng.below(6);
    for (std::size_t i = 0; i < n; ++i) msgs.push_back(Bytes(1 + rng.below(8), 'a'));
    MessageSequence seq = seq_of(msgs);
    for (int edit = 0; edit < 10; ++edit) {
      const std::size_t r = rng.below(seq.message_count());
      const std::size_t len = seq.regions[r].length();
      if (rng.chance(0.5)) {
        const std::size_t add = 1 + rng.below(4);
        seq.buffer.insert(seq.regions[r].end, Bytes(add, 'b'));
        seq = reindex(seq, r, static_cast<std::ptrdiff_t>(add));
      } else if (len > 1) {
        const std::size_t cut = 1 + rng.below(len - 1);
        seq.buffer.erase(seq.regions[r].start, cut);
        seq = reindex(seq, r, -static_cast<std::ptrdiff_t>(cut));
      }
      ASSERT_NO_THROW(validate(seq));
    }
  }
}

TEST(Annotate, BuildsCumulativePrefixesWithBannerInFirstRegion) {
  MessageSequence seq = seq_of({"USER foo\r\n", "PASS foo\r\n", "QUIT\r\n"});
  const std::vector<std::vector<StateId>> per = {ids({2}), ids({3}), ids({4})};
  annotate(seq, ids({1}), per);
  EXPECT_EQ(seq.regions[0].states_observed, ids({1, 2}));
  EXPECT_EQ(seq.regions[2].states_observed, ids({1, 2, 3, 4}));
  EXPECT_NO_THROW(validate(seq));
}

TEST(Annotate, UnansweredMessagesRepeatTheLastAnnotation) {
  MessageSequence seq = seq_of({"a", "b", "c"});
  const std::vector<std::vector<StateId>> per = {ids({5})};
  annotate(seq, {}, per);
  EXPECT_EQ(seq.regions[2].states_observed, ids({5}));
}

TEST(DistinctStates, FirstSeenOrderWithoutRepeats) {
  MessageSequence seq = seq_of({"a", "b"});
  const std::vector<std::vector<StateId>> per = {ids({3, 1}), ids({3, 2, 1})};
  annotate(seq, {}, per);
  EXPECT_EQ(distinct_states(seq), ids({3, 1, 2}));
}

}  // namespace
}  // namespace protofuzz
