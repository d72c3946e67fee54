#pragma once

#include <sys/types.h>

#include <cstdint>
#include <string>

#include "protofuzz/target.hpp"

namespace protofuzz {

enum class SyncMode {
  /// Wait for socket readiness, then drain until the line goes quiet.
  kPoll,
  /// Sleep delay_us after each send, then take whatever arrived.
  kStaticDelay,
};

struct TargetConfig {
  enum class Kind { kInProcess, kTcp };

  Kind kind = Kind::kInProcess;
  BenchTarget builtin = BenchTarget::kFtp;
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;
  /// Run through /bin/sh. The harness owns the resulting process.
  std::string launch_command;
  /// Optional reset script run before every server start.
  std::string cleanup_command;
  SyncMode sync = SyncMode::kPoll;
  std::uint32_t delay_us = 0;
  std::uint32_t poll_timeout_ms = 100;
  /// Poll mode stops draining after this long without new bytes.
  std::uint32_t drain_quiet_us = 500;
  std::uint32_t startup_timeout_ms = 5000;
  /// Keep one server process across sequences (a new connection still
  /// starts a new session). Restarts only after a crash.
  bool keep_alive = false;

  /// Throws ConfigError on a malformed configuration.
  void validate() const;
};

/// Parses "tcp://host:port" or "builtin:<name>" into the matching fields.
TargetConfig parse_target_spec(std::string_view spec);

/// Client for a real server reached over TCP. Never reports code coverage.
class TcpTarget final : public TargetAdapter {
 public:
  TcpTarget(TargetConfig config, const CodecSpec& codec);
  ~TcpTarget() override;
  TcpTarget(const TcpTarget&) = delete;
  TcpTarget& operator=(const TcpTarget&) = delete;

  const CodecSpec& codec() const override { return codec_; }
  bool reports_code_coverage() const override { return false; }
  bool deterministic_clock() const override { return false; }
  std::string describe() const override;

  /// Runs the cleanup command, (re)starts the server and waits until the
  /// port accepts connections. Throws HarnessError on timeout or when the
  /// cleanup command fails.
  void reset() override;
  ExecOutcome exchange(const MessageSequence& seq, TraceMap& trace) override;
  bool probe_crash() override;

  pid_t server_pid() const { return pid_; }
  /// Stops the server process if one is running.
  void stop();

 private:
  int connect_once() const;
  void wait_until_accepting();
  Bytes receive(int fd);
  bool server_died(bool wait_for_exit);

  TargetConfig config_;
  CodecSpec codec_;
  pid_t pid_ = -1;
  bool last_crashed_ = false;
  bool needs_restart_ = true;
};

}  // namespace protofuzz
