#include <gtest/gtest.h>

#include "protofuzz/target.hpp"
#include "test_support.hpp"

namespace protofuzz {
namespace {

using testing::seq_of;

struct Replay {
  ExecOutcome outcome;
  TraceMap trace{kDefaultMapSize};
  StateRegistry registry;
};

Replay run(BenchTarget t, const MessageSequence& seq) {
  InProcessTarget target(t, BitmapGeometry{});
  Replay r;
  r.outcome = send_sequence(target, seq, r.trace, r.registry, BitmapGeometry{});
  return r;
}

std::vector<std::uint32_t> raw_codes(const Replay& r) {
  std::vector<std::uint32_t> out;
  for (StateId s : r.outcome.state_seq) out.push_back(*r.registry.raw_code(s));
  return out;
}

MessageSequence listing() {
  return split_requests(codec_by_name("ftp"), ftp_happy_path_capture());
}

TEST(InProcessTarget, ListingGivesTenCodesStartingWithBanner) {
  const Replay r = run(BenchTarget::kFtp, listing());
  EXPECT_EQ(r.outcome.banner.substr(0, 4), "220 ");
  EXPECT_EQ(r.outcome.responses.size(), 7u);
  EXPECT_EQ(raw_codes(r),
            (std::vector<std::uint32_t>{220, 331, 230, 257, 250, 150, 226, 150, 226, 221}));
  EXPECT_FALSE(r.outcome.crashed);
  EXPECT_EQ(r.outcome.messages_sent, 7u);
}

TEST(InProcessTarget, EmptySequenceYieldsOnlyTheBannerState) {
  const Replay r = run(BenchTarget::kFtp, MessageSequence{});
  EXPECT_TRUE(r.outcome.responses.empty());
  EXPECT_EQ(raw_codes(r), std::vector<std::uint32_t>{220});
}

TEST(InProcessTarget, CrashOnThirdMessageTruncatesResponses) {
  const Replay r = run(BenchTarget::kFtp,
                    seq_of({"USER foo\r\n", "PASS foo\r\n", "CWD /\r\n",
                            "STOR " + std::string(80, 'x') + "\r\n", "QUIT\r\n"}));
  EXPECT_TRUE(r.outcome.crashed);
  EXPECT_EQ(r.outcome.responses.size(), 3u);
  EXPECT_EQ(r.outcome.messages_sent, 4u);

  const Replay rtsp = run(BenchTarget::kRtsp,
                       seq_of({"OPTIONS rtsp://h/stream RTSP/1.0\r\n\r\n",
                               "PLAY rtsp://h/stream RTSP/1.0\r\nRange: npt=0-\r\n\r\n",
                               "TEARDOWN rtsp://h/stream RTSP/1.0\r\n\r\n"}));
  EXPECT_TRUE(rtsp.outcome.crashed);
  EXPECT_EQ(rtsp.outcome.responses.size(), 2u);
}

TEST(InProcessTarget, ResponsesLengthNeverExceedsMessagesSent) {
  const Replay r = run(BenchTarget::kFtp, seq_of({"QUIT\r\n", "NOOP\r\n", "NOOP\r\n"}));
  EXPECT_EQ(r.outcome.messages_sent, 1u);
  EXPECT_EQ(r.outcome.responses.size(), 1u);
}

TEST(InProcessTarget, ProbeCrashReflectsServerState) {
  InProcessTarget t(BenchTarget::kFtp, BitmapGeometry{});
  TraceMap trace;
  StateRegistry reg;
  send_sequence(t, listing(), trace, reg, BitmapGeometry{});
  EXPECT_FALSE(t.probe_crash());
  send_sequence(t, seq_of({"USER foo\r\n", "PASS foo\r\n", "CWD /\r\n", "STOR " + std::string(80, 'x') + "\r\n"}),
                trace, reg, BitmapGeometry{});
  EXPECT_TRUE(t.probe_crash());
  t.reset();
  EXPECT_FALSE(t.probe_crash());
}

TEST(InProcessTarget, ResetThenReplayIsDeterministic) {
  const Replay a = run(BenchTarget::kFtp, listing());
  const Replay b = run(BenchTarget::kFtp, listing());
  EXPECT_EQ(a.outcome.state_seq, b.outcome.state_seq);
  EXPECT_EQ(a.outcome.responses, b.outcome.responses);
  EXPECT_EQ(a.outcome.exec_time_us, b.outcome.exec_time_us);
  ASSERT_EQ(a.trace.touched().size(), b.trace.touched().size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) ASSERT_EQ(a.trace.at(i), b.trace.at(i));
}

TEST(InProcessTarget, TraceHasStatePathAndCodeEdges) {
  const Replay r = run(BenchTarget::kFtp, listing());
  const BitmapGeometry g;
  std::size_t state_entries = 0;
  std::size_t code_entries = 0;
  for (std::uint32_t i : r.trace.touched()) (i < g.shift_size ? state_entries : code_entries)++;
  // init->220, 220->331, 331->230, 230->257, 257->250, 250->150, 150->226,
  // 226->150, 226->221; the repeated 150->226 shares an entry.
  EXPECT_EQ(state_entries, 9u);
  EXPECT_GT(code_entries, 0u);
  EXPECT_EQ(r.trace.at(state_index(r.registry.find(150)->value, r.registry.find(226)->value,
                                   g.state_size, g.shift_size)),
            2);
}

TEST(ResponseCodes, UnparseableBytesMapToUnknownCode) {
  const CodecSpec& ftp = codec_by_name("ftp");
  EXPECT_EQ(response_codes(ftp, "garbage\r\n"), std::vector<std::uint32_t>{kUnknownRawCode});
  EXPECT_TRUE(response_codes(ftp, "").empty());
  EXPECT_EQ(response_codes(ftp, "200 ok\r\n"), std::vector<std::uint32_t>{200});
}

}  // namespace
}  // namespace protofuzz
