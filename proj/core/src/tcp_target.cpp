#include "protofuzz/tcp_target.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <thread>

#include "protofuzz/error.hpp"

namespace protofuzz {
namespace {

using Clock = std::chrono::steady_clock;

/// How long a dropped connection waits for the server process to die.
constexpr std::int64_t kExitGraceUs = 20'000;

std::int64_t micros_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count();
}

bool send_all(int fd, std::string_view data, bool wait_writable, int timeout_ms) {
  while (!data.empty()) {
    if (wait_writable) {
      pollfd p{fd, POLLOUT, 0};
      if (::poll(&p, 1, timeout_ms) <= 0 || (p.revents & (POLLERR | POLLHUP)) != 0) return false;
    }
    const ssize_t n = ::send(fd, data.data(), data.size(), MSG_NOSIGNAL);
    if (n <= 0) {
      if (n < 0 && (errno == EAGAIN || errno == EINTR)) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

/// Reads what is immediately available. Returns false once the peer is gone.
bool read_available(int fd, Bytes& out) {
  char buf[4096];
  for (;;) {
    const ssize_t n = ::recv(fd, buf, sizeof buf, MSG_DONTWAIT);
    if (n > 0) {
      out.append(buf, static_cast<std::size_t>(n));
      continue;
    }
    if (n == 0) return false;
    if (errno == EINTR) continue;
    return errno == EAGAIN || errno == EWOULDBLOCK;
  }
}

}  // namespace

void TargetConfig::validate() const {
  if (kind != Kind::kTcp) return;
  if (host.empty() || port == 0) throw ConfigError("tcp target needs a host and a non-zero port");
  if (launch_command.empty()) throw ConfigError("tcp target needs a launch command");
  if (poll_timeout_ms == 0) throw ConfigError("poll timeout must be positive");
}

TargetConfig parse_target_spec(std::string_view spec) {
  TargetConfig cfg;
  constexpr std::string_view kBuiltin = "builtin:";
  constexpr std::string_view kTcp = "tcp://";
  if (spec.substr(0, kBuiltin.size()) == kBuiltin) {
    cfg.kind = TargetConfig::Kind::kInProcess;
    cfg.builtin = bench_target_by_name(spec.substr(kBuiltin.size()));
    return cfg;
  }
  if (spec.substr(0, kTcp.size()) == kTcp) {
    const std::string_view rest = spec.substr(kTcp.size());
    const std::size_t colon = rest.rfind(':');
    if (colon == std::string_view::npos || colon == 0 || colon + 1 == rest.size()) {
      throw ConfigError("expected tcp://host:port, got '" + std::string(spec) + "'");
    }
    const std::string port_text(rest.substr(colon + 1));
    char* end = nullptr;
    const unsigned long port = std::strtoul(port_text.c_str(), &end, 10);
    if (*end != '\0' || port == 0 || port > 65535) {
      throw ConfigError("bad port in '" + std::string(spec) + "'");
    }
    cfg.kind = TargetConfig::Kind::kTcp;
    cfg.host = std::string(rest.substr(0, colon));
    cfg.port = static_cast<std::uint16_t>(port);
    return cfg;
  }
  throw ConfigError("target must be tcp://host:port or builtin:<name>, got '" +
                    std::string(spec) + "'");
}

TcpTarget::TcpTarget(TargetConfig config, const CodecSpec& codec)
    : config_(std::move(config)), codec_(codec) {
  config_.kind = TargetConfig::Kind::kTcp;
  config_.validate();
}

TcpTarget::~TcpTarget() { stop(); }

std::string TcpTarget::describe() const {
  return "tcp://" + config_.host + ":" + std::to_string(config_.port);
}

void TcpTarget::stop() {
  if (pid_ <= 0) return;
  ::kill(pid_, SIGTERM);
  const auto t0 = Clock::now();
  int status = 0;
  while (::waitpid(pid_, &status, WNOHANG) == 0) {
    if (micros_since(t0) > 1'000'000) {
      ::kill(pid_, SIGKILL);
      ::waitpid(pid_, &status, 0);
      break;
    }
    std::this_thread::sleep_for(std::chrono::microseconds(200));
  }
  pid_ = -1;
}

int TcpTarget::connect_once() const {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(config_.port);
  if (::getaddrinfo(config_.host.c_str(), port.c_str(), &hints, &res) != 0) return -1;
  int fd = -1;
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd >= 0) {
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  }
  return fd;
}

void TcpTarget::wait_until_accepting() {
  const auto t0 = Clock::now();
  for (;;) {
    // Probe with a bare connect; a server that needs the full session to
    // finish handles the immediate close like any dropped client.
    const int fd = connect_once();
    if (fd >= 0) {
      ::close(fd);
      return;
    }
    if (pid_ > 0 && server_died(false)) {
      throw HarnessError("server exited during startup: " + config_.launch_command, false);
    }
    if (micros_since(t0) > static_cast<std::int64_t>(config_.startup_timeout_ms) * 1000) {
      throw HarnessError("server did not accept connections on " + describe());
    }
    std::this_thread::sleep_for(std::chrono::microseconds(500));
  }
}

void TcpTarget::reset() {
  stop();
  if (!config_.cleanup_command.empty()) {
    const int rc = std::system(config_.cleanup_command.c_str());
    if (rc != 0) {
      throw HarnessError("cleanup command failed with status " + std::to_string(rc), false);
    }
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw HarnessError(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    const std::string cmd = "exec " + config_.launch_command;
    ::execl("/bin/sh", "sh", "-c", cmd.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  pid_ = pid;
  needs_restart_ = false;
  last_crashed_ = false;
  wait_until_accepting();
}

bool TcpTarget::server_died(bool wait_for_exit) {
  if (pid_ <= 0) return true;
  int status = 0;
  pid_t r = ::waitpid(pid_, &status, WNOHANG);
  if (r == 0 && wait_for_exit) {
    const auto t0 = Clock::now();
    while (r == 0 && micros_since(t0) < kExitGraceUs) {
      std::this_thread::sleep_for(std::chrono::microseconds(200));
      r = ::waitpid(pid_, &status, WNOHANG);
    }
  }
  if (r == 0) return false;
  pid_ = -1;
  return r < 0 || WIFSIGNALED(status) || WIFEXITED(status);
}

Bytes TcpTarget::receive(int fd) {
  Bytes out;
  if (config_.sync == SyncMode::kStaticDelay) {
    std::this_thread::sleep_for(std::chrono::microseconds(config_.delay_us));
    read_available(fd, out);
    return out;
  }
  pollfd p{fd, POLLIN, 0};
  if (::poll(&p, 1, static_cast<int>(config_.poll_timeout_ms)) <= 0) return out;
  if (!read_available(fd, out)) return out;
  const int quiet_ms = static_cast<int>((config_.drain_quiet_us + 999) / 1000);
  for (;;) {
    p.revents = 0;
    if (::poll(&p, 1, quiet_ms) <= 0) break;
    const std::size_t before = out.size();
    if (!read_available(fd, out) || out.size() == before) break;
  }
  return out;
}

ExecOutcome TcpTarget::exchange(const MessageSequence& seq, TraceMap&) {
  if (needs_restart_ || !config_.keep_alive || pid_ <= 0 || server_died(false)) reset();
  const auto t0 = Clock::now();
  ExecOutcome out;
  const int fd = connect_once();
  if (fd < 0) {
    needs_restart_ = true;
    throw HarnessError("connect to " + describe() + " failed");
  }
  bool dropped = false;
  if (codec_.expects_banner) {
    out.banner = receive(fd);
    out.banner_codes = response_codes(codec_, out.banner);
  }
  const bool poll_send = config_.sync == SyncMode::kPoll;
  for (std::size_t i = 0; i < seq.message_count() && !dropped; ++i) {
    if (!send_all(fd, seq.message_view(i), poll_send, static_cast<int>(config_.poll_timeout_ms))) {
      dropped = true;
      break;
    }
    ++out.messages_sent;
    Bytes response = receive(fd);
    if (response.empty()) {
      // Nothing came back: either a slow reply or a dead peer. Peek to tell.
      char c;
      const ssize_t n = ::recv(fd, &c, 1, MSG_PEEK | MSG_DONTWAIT);
      if (n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK)) dropped = true;
      if (dropped) break;
    }
    out.message_codes.push_back(response_codes(codec_, response));
    out.responses.push_back(std::move(response));
  }
  ::close(fd);
  // A dropped connection is only a crash if the process is gone; a clean
  // close after QUIT leaves the server running.
  out.crashed = dropped ? server_died(true) : (pid_ > 0 && server_died(false));
  if (!out.crashed && dropped && pid_ > 0) {
    const int probe = connect_once();
    if (probe < 0) {
      out.crashed = true;
    } else {
      ::close(probe);
    }
  }
  last_crashed_ = out.crashed;
  if (out.crashed) needs_restart_ = true;
  out.exec_time_us = static_cast<std::uint64_t>(micros_since(t0));
  return out;
}

bool TcpTarget::probe_crash() {
  if (!last_crashed_ && pid_ > 0 && server_died(false)) {
    last_crashed_ = true;
    needs_restart_ = true;
  }
  return last_crashed_;
}

}  // namespace protofuzz
