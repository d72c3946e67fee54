#include <gtest/gtest.h>

#include "protofuzz/codec.hpp"
#include "protofuzz/error.hpp"
#include "protofuzz/rng.hpp"
#include "test_support.hpp"

namespace protofuzz {
namespace {

const CodecSpec& ftp() { return codec_by_name("ftp"); }
const CodecSpec& rtsp() { return codec_by_name("rtsp"); }

TEST(Codec, BuiltinsValidateAndUnknownNameFails) {
  for (const std::string& name : codec_names()) EXPECT_NO_THROW(validate(codec_by_name(name)));
  EXPECT_THROW(codec_by_name("gopher"), ConfigError);
}

TEST(Codec, ValidateRejectsBadRules) {
  CodecSpec c{"x", TerminatorRule{""}, LeadingDecimalRule{3}};
  EXPECT_THROW(validate(c), ConfigError);
  c.boundary_rule = LengthPrefixRule{3};
  EXPECT_THROW(validate(c), ConfigError);
  c.boundary_rule = LengthPrefixRule{2};
  c.status_rule = LeadingDecimalRule{0};
  EXPECT_THROW(validate(c), ConfigError);
  c.status_rule = FixedOffsetRule{0, 3};
  c.response_separator.clear();
  EXPECT_THROW(validate(c), ConfigError);
}

TEST(SplitRequests, ListingCaptureGivesSevenRequests) {
  const MessageSequence seq = split_requests(
      ftp(), "USER foo\r\nPASS foo\r\nMKD demo\r\nCWD demo\r\nSTOR test.txt\r\nLIST\r\nQUIT\r\n");
  ASSERT_EQ(seq.message_count(), 7u);
  EXPECT_EQ(seq.message_view(0), "USER foo\r\n");
  EXPECT_EQ(seq.message_view(6), "QUIT\r\n");
  for (const Region& r : seq.regions) EXPECT_FALSE(r.incomplete);
}

TEST(SplitRequests, TrailingBytesFormIncompleteRegion) {
  const MessageSequence seq = split_requests(ftp(), "NOOP\r\nUSE");
  ASSERT_EQ(seq.message_count(), 2u);
  EXPECT_EQ(seq.message_view(1), "USE");
  EXPECT_TRUE(seq.regions[1].incomplete);
}

TEST(SplitRequests, EmptyInputIsAnError) {
  EXPECT_THROW(split_requests(ftp(), ""), InvalidArgument);
}

TEST(SplitRequests, LengthPrefixFramesAndTruncation) {
  const CodecSpec lp{"lp", LengthPrefixRule{2}, LeadingDecimalRule{3}};
  const std::string raw = std::string("\x00\x02", 2) + "ab" + std::string("\x00\x01", 2) + "c" +
                          std::string("\x00\x09", 2) + "xy";
  const MessageSequence seq = split_requests(lp, raw);
  ASSERT_EQ(seq.message_count(), 3u);
  EXPECT_EQ(seq.message_view(0), std::string("\x00\x02", 2) + "ab");
  EXPECT_EQ(seq.message_view(1), std::string("\x00\x01", 2) + "c");
  EXPECT_TRUE(seq.regions[2].incomplete);
  EXPECT_FALSE(seq.regions[1].incomplete);
}

// Whatever the input, the regions must partition it exactly.
TEST(SplitRequests, PropertyRegionsPartitionInput) {
  Rng rng(3);
  const char alphabet[] = {'A', '\r', '\n', ' ', '1'};
  for (int t = 0; t < 2000; ++t) {
    std::string raw;
    const std::size_t len = 1 + rng.below(40);
    for (std::size_t i = 0; i < len; ++i) raw += alphabet[rng.below(sizeof alphabet)];
    for (const CodecSpec* c : {&ftp(), &rtsp()}) {
      const MessageSequence seq = split_requests(*c, raw);
      ASSERT_NO_THROW(validate(seq));
      std::string joined;
      for (std::size_t i = 0; i < seq.message_count(); ++i) joined += seq.message_view(i);
      ASSERT_EQ(joined, raw);
      for (std::size_t i = 0; i + 1 < seq.message_count(); ++i) ASSERT_FALSE(seq.regions[i].incomplete);
    }
  }
}

TEST(ExtractStatusCodes, FtpLines) {
  EXPECT_EQ(extract_status_codes(ftp(), "220 LightFTP server ready\r\n"),
            std::vector<std::uint32_t>{220});
  EXPECT_EQ(extract_status_codes(ftp(), "150 Opening\r\n226 Done\r\n"),
            (std::vector<std::uint32_t>{150, 226}));
  EXPECT_TRUE(extract_status_codes(ftp(), "hello there\r\n").empty());
  EXPECT_TRUE(extract_status_codes(ftp(), "").empty());
  // Runs longer than max_digits are not status codes.
  EXPECT_TRUE(extract_status_codes(ftp(), "2200 nope\r\n").empty());
}

TEST(ExtractStatusCodes, RtspUnits) {
  EXPECT_EQ(extract_status_codes(rtsp(), "RTSP/1.0 200 OK\r\nCSeq: 1\r\n\r\n"),
            std::vector<std::uint32_t>{200});
  EXPECT_EQ(extract_status_codes(rtsp(), "RTSP/1.0 454 Session Not Found\r\n\r\nRTSP/1.0 200 OK\r\n\r\n"),
            (std::vector<std::uint32_t>{454, 200}));
  EXPECT_TRUE(extract_status_codes(rtsp(), "RTSP/1.0 2x0 OK\r\n\r\n").empty());
}

TEST(StateRegistry, DenseKeysInFirstSeenOrder) {
  StateRegistry reg;
  EXPECT_EQ(reg.number(220).value, 1u);
  EXPECT_EQ(reg.number(331).value, 2u);
  EXPECT_EQ(reg.number(220).value, 1u);
  EXPECT_EQ(reg.find(331)->value, 2u);
  EXPECT_FALSE(reg.find(999).has_value());
  EXPECT_EQ(reg.raw_code(StateId{2}), 331u);
  EXPECT_FALSE(reg.raw_code(kInitialState).has_value());
  EXPECT_EQ(reg.to_tsv(), "220\t1\n331\t2\n");
  EXPECT_EQ(number_state(0, reg).value, 3u);
}

TEST(StateRegistry, ExhaustionAtStateSize) {
  StateRegistry reg(4);
  reg.number(1);
  reg.number(2);
  reg.number(3);
  EXPECT_THROW(reg.number(4), StateSpaceExhausted);
  EXPECT_EQ(reg.number(2).value, 2u);
  EXPECT_THROW(StateRegistry(1), InvalidArgument);
}

}  // namespace
}  // namespace protofuzz
