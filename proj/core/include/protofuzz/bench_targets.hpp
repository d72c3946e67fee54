#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "protofuzz/coverage.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz {

/// What one request (or the connection greeting) did to a bundled server.
struct HandleResult {
  Bytes response;
  std::vector<EdgeKey> edges;
  bool crashed = false;
  /// Server closed the session after answering (e.g. QUIT).
  bool closed = false;
};

/// Deterministic, instrumented protocol server living in the fuzzer's
/// process. Responses depend only on the messages since construction.
class ProtocolServer {
 public:
  virtual ~ProtocolServer() = default;

  /// Greeting sent on connect; empty response when the protocol has none.
  virtual HandleResult greet() = 0;
  /// Throws InvalidArgument once the server has crashed or closed.
  virtual HandleResult handle(std::string_view message) = 0;
  virtual bool crashed() const = 0;
  virtual bool closed() const = 0;
};

enum class BenchTarget { kFtp, kRtsp };

BenchTarget bench_target_by_name(std::string_view name);
std::string_view bench_target_name(BenchTarget target);
/// Codec a bundled target speaks ("ftp" or "rtsp").
std::string_view bench_codec_name(BenchTarget target);

std::unique_ptr<ProtocolServer> make_server(BenchTarget target);

/// Total instrumented edges of a bundled target.
std::size_t edge_count(BenchTarget target);

/// The recorded happy-path session for each target, as a raw capture.
Bytes ftp_happy_path_capture();
Bytes rtsp_happy_path_capture();
Bytes happy_path_capture(BenchTarget target);

/// FTP-like server over response codes 150/200/211/213/214/215/220/221/
/// 226/227/230/250/257/331/350/452/500/501/503/504/530/550. Commands other
/// than USER/PASS/QUIT/NOOP/SYST/HELP/FEAT are refused with 530 until login
/// (user "foo"/"foo" or "anonymous"). A STOR whose argument is longer than
/// 64 bytes after a successful CWD aborts the server.
class FtpLikeServer final : public ProtocolServer {
 public:
  static constexpr std::size_t kMaxEntries = 4;
  static constexpr std::size_t kOverflowArgLength = 64;

  HandleResult greet() override;
  HandleResult handle(std::string_view message) override;
  bool crashed() const override { return crashed_; }
  bool closed() const override { return closed_; }

  /// Canonical encoding of the session state (for exhaustive exploration).
  std::string state_signature() const;

 private:
  enum class Phase { kFresh, kUserGiven, kLoggedIn };

  Phase phase_ = Phase::kFresh;
  bool user_known_ = false;
  bool anonymous_ = false;
  bool after_cwd_ = false;
  bool rename_pending_ = false;
  bool rest_pending_ = false;
  char type_ = 'A';
  std::vector<std::string> dirs_;
  std::vector<std::string> files_;
  bool crashed_ = false;
  bool closed_ = false;
};

/// RTSP-flavoured server with INIT/READY/PLAY states. A PLAY carrying a
/// Range header while in INIT jumps straight to PLAY without a session;
/// a TEARDOWN issued in that state aborts the server.
class HiddenTransitionServer final : public ProtocolServer {
 public:
  static constexpr std::string_view kSessionId = "4d2f1a";

  HandleResult greet() override;
  HandleResult handle(std::string_view message) override;
  bool crashed() const override { return crashed_; }
  bool closed() const override { return closed_; }

  std::string state_signature() const;

 private:
  enum class Phase { kInit, kReady, kPlay };

  Phase phase_ = Phase::kInit;
  bool has_session_ = false;
  bool described_ = false;
  bool crashed_ = false;
  bool closed_ = false;
};

/// Serves `target` on 127.0.0.1:`port`, one fresh server per connection.
/// Requests are framed by the target's codec. A planted crash calls
/// std::abort(). Returns after the first connection when `once` is set.
/// `ready_fd`, if >= 0, receives one byte once the socket is listening.
int serve_tcp(BenchTarget target, std::uint16_t port, bool once, int ready_fd = -1);

}  // namespace protofuzz
