#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>

#include "protofuzz/fuzzer.hpp"
#include "protofuzz/tcp_target.hpp"

namespace protofuzz::cli {

enum ExitCode : int {
  kExitClean = 0,
  /// fuzz: crashes were saved. replay: the sequence crashed the target.
  kExitCrash = 1,
  kExitSetupError = 2,
};

/// Connection options shared by every subcommand that talks to a target.
struct TargetOptions {
  std::string spec = "builtin:ftp";
  /// Codec name; defaults to the builtin target's codec.
  std::string codec;
  std::optional<std::uint32_t> delay_us;
  std::string sync = "poll";
  std::uint32_t poll_timeout_ms = 100;
  std::string launch_command;
  std::string cleanup_command;
  bool keep_alive = false;
};

struct Target {
  TargetConfig config;
  const CodecSpec* codec = nullptr;
  std::unique_ptr<TargetAdapter> adapter;
};

/// Resolves and checks the options, then builds the adapter. Builtin
/// targets refuse the TCP-only options. Throws ConfigError.
Target open_target(const TargetOptions& options, const BitmapGeometry& geometry);

/// "123" or "123x" means executions, "60s", "5m" and "2h" mean campaign
/// time. Fills the matching field of `config`. Throws ConfigError.
void apply_budget(const std::string& text, CampaignConfig& config);

/// Replays one sequence file and prints each message with its response.
/// Returns kExitCrash when the target crashed, kExitClean otherwise.
int cmd_replay(const TargetOptions& options, const std::filesystem::path& file,
               std::ostream& out);

/// Entry point behind main(); returns the process exit code.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace protofuzz::cli
