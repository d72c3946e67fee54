#include <gtest/gtest.h>
#include <signal.h>

#include <chrono>
#include <thread>

#include "protofuzz/error.hpp"
#include "protofuzz/tcp_target.hpp"
#include "test_support.hpp"

namespace protofuzz {
namespace {

using testing::seq_of;

TargetConfig server_config(const std::string& target, std::uint16_t port) {
  TargetConfig cfg;
  cfg.kind = TargetConfig::Kind::kTcp;
  cfg.port = port;
  cfg.launch_command = std::string(PROTOFUZZ_CLI_PATH) + " serve --target " + target +
                       " --port " + std::to_string(port);
  cfg.poll_timeout_ms = 200;
  return cfg;
}

std::vector<std::uint32_t> flat_codes(const ExecOutcome& out) {
  std::vector<std::uint32_t> codes = out.banner_codes;
  for (const auto& v : out.message_codes) codes.insert(codes.end(), v.begin(), v.end());
  return codes;
}

MessageSequence listing() { return split_requests(codec_by_name("ftp"), ftp_happy_path_capture()); }

const std::vector<std::uint32_t> kListingCodes = {220, 331, 230, 257, 250, 150, 226, 150, 226, 221};

TEST(TargetSpec, ParsesBuiltinAndTcp) {
  const TargetConfig b = parse_target_spec("builtin:rtsp");
  EXPECT_EQ(b.kind, TargetConfig::Kind::kInProcess);
  EXPECT_EQ(b.builtin, BenchTarget::kRtsp);
  const TargetConfig t = parse_target_spec("tcp://127.0.0.1:2121");
  EXPECT_EQ(t.kind, TargetConfig::Kind::kTcp);
  EXPECT_EQ(t.host, "127.0.0.1");
  EXPECT_EQ(t.port, 2121);
  EXPECT_THROW(parse_target_spec("tcp://host"), ConfigError);
  EXPECT_THROW(parse_target_spec("tcp://host:0"), ConfigError);
  EXPECT_THROW(parse_target_spec("udp://host:1"), ConfigError);
  EXPECT_THROW(parse_target_spec("builtin:nope"), ConfigError);
}

TEST(TargetConfig, TcpNeedsAddressAndLaunchCommand) {
  TargetConfig cfg;
  cfg.kind = TargetConfig::Kind::kTcp;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.port = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.launch_command = "true";
  EXPECT_NO_THROW(cfg.validate());
}

TEST(TcpTarget, PollReplayMatchesInProcessCodes) {
  TcpTarget t(server_config("ftp", testing::free_port()), codec_by_name("ftp"));
  TraceMap trace;
  const ExecOutcome out = t.exchange(listing(), trace);
  EXPECT_EQ(flat_codes(out), kListingCodes);
  EXPECT_FALSE(out.crashed);
  EXPECT_TRUE(trace.touched().empty());
  EXPECT_FALSE(t.reports_code_coverage());
}

TEST(TcpTarget, StaticDelayReplayMatchesToo) {
  TargetConfig cfg = server_config("ftp", testing::free_port());
  cfg.sync = SyncMode::kStaticDelay;
  cfg.delay_us = 20000;
  TcpTarget t(cfg, codec_by_name("ftp"));
  TraceMap trace;
  EXPECT_EQ(flat_codes(t.exchange(listing(), trace)), kListingCodes);
}

TEST(TcpTarget, KeepAliveReusesTheServerProcess) {
  TargetConfig cfg = server_config("ftp", testing::free_port());
  cfg.keep_alive = true;
  TcpTarget t(cfg, codec_by_name("ftp"));
  TraceMap trace;
  EXPECT_EQ(flat_codes(t.exchange(listing(), trace)), kListingCodes);
  const pid_t pid = t.server_pid();
  EXPECT_EQ(flat_codes(t.exchange(listing(), trace)), kListingCodes);
  EXPECT_EQ(t.server_pid(), pid);
}

TEST(TcpTarget, PlantedCrashIsDetectedFromProcessExit) {
  TcpTarget t(server_config("ftp", testing::free_port()), codec_by_name("ftp"));
  TraceMap trace;
  const ExecOutcome out = t.exchange(
      seq_of({"USER foo\r\n", "PASS foo\r\n", "CWD /\r\n", "STOR " + std::string(80, 'x') + "\r\n",
              "NOOP\r\n"}),
      trace);
  EXPECT_TRUE(out.crashed);
  EXPECT_TRUE(t.probe_crash());
  EXPECT_EQ(out.responses.size(), 3u);
  // The next exchange restarts the server.
  EXPECT_EQ(flat_codes(t.exchange(listing(), trace)), kListingCodes);
  EXPECT_FALSE(t.probe_crash());
}

TEST(TcpTarget, ExternallyKilledServerCountsAsCrash) {
  TargetConfig cfg = server_config("ftp", testing::free_port());
  cfg.keep_alive = true;
  TcpTarget t(cfg, codec_by_name("ftp"));
  TraceMap trace;
  t.exchange(listing(), trace);
  EXPECT_FALSE(t.probe_crash());
  ::kill(t.server_pid(), SIGKILL);
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  EXPECT_TRUE(t.probe_crash());
  // The next exchange starts a fresh server.
  EXPECT_EQ(flat_codes(t.exchange(listing(), trace)), kListingCodes);
  EXPECT_FALSE(t.probe_crash());
}

TEST(TcpTarget, FailingCleanupCommandIsSurfaced) {
  TargetConfig cfg = server_config("ftp", testing::free_port());
  cfg.cleanup_command = "exit 3";
  TcpTarget t(cfg, codec_by_name("ftp"));
  EXPECT_THROW(t.reset(), HarnessError);
}

TEST(TcpTarget, ResetOfIdleTargetSucceeds) {
  TcpTarget t(server_config("rtsp", testing::free_port()), codec_by_name("rtsp"));
  EXPECT_NO_THROW(t.reset());
  EXPECT_GT(t.server_pid(), 0);
  t.stop();
  EXPECT_EQ(t.server_pid(), -1);
}

TEST(TcpTarget, ServerThatNeverListensTimesOut) {
  TargetConfig cfg = server_config("ftp", testing::free_port());
  cfg.launch_command = "sleep 5";
  cfg.startup_timeout_ms = 200;
  TcpTarget t(cfg, codec_by_name("ftp"));
  EXPECT_THROW(t.reset(), HarnessError);
}

}  // namespace
}  // namespace protofuzz
