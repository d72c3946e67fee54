#pragma once

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "protofuzz/codec.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("protofuzz_test_" + std::to_string(::getpid()) + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Asks the kernel for a currently unused loopback port.
inline std::uint16_t free_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

inline MessageSequence seq_of(std::vector<Bytes> messages) {
  return MessageSequence::from_messages(std::span<const Bytes>(messages));
}

inline std::vector<Bytes> texts(const std::vector<Message>& ms) {
  std::vector<Bytes> out;
  for (const Message& m : ms) out.push_back(m.bytes());
  return out;
}

inline std::vector<StateId> ids(std::initializer_list<std::uint32_t> values) {
  std::vector<StateId> out;
  for (std::uint32_t v : values) out.push_back(StateId{v});
  return out;
}

}  // namespace protofuzz::testing
