#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "protofuzz/codec.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz {

/// Throws ConfigError when the file cannot be read.
Bytes read_file(const std::filesystem::path& path);
/// Writes atomically (temporary file + rename). Throws Error on failure.
void write_file(const std::filesystem::path& path, std::string_view data);

/// Sidecar written next to every crash file so replay rebuilds the exact
/// message boundaries the fuzzer sent, even when a mutated message no
/// longer ends with the codec's terminator.
struct CrashMeta {
  std::string codec;
  std::string target;
  std::vector<std::pair<std::size_t, std::size_t>> regions;
};

std::string format_crash_meta(const CrashMeta& meta);
/// Throws InvalidArgument on malformed input.
CrashMeta parse_crash_meta(std::string_view text);
CrashMeta crash_meta_for(const MessageSequence& seq, std::string codec, std::string target);

/// Path of the sidecar for a sequence file.
std::filesystem::path meta_path(const std::filesystem::path& file);

/// Reads a raw capture. Uses the sidecar's boundaries when one exists,
/// otherwise frames with `codec`. Throws InvalidArgument for an empty file
/// and ConfigError when the sidecar names a different codec.
MessageSequence load_sequence_file(const std::filesystem::path& file, const CodecSpec& codec);

/// Capture files of a seed directory: the lines of manifest.txt if present,
/// otherwise every regular file (sidecars excluded) in name order.
std::vector<std::filesystem::path> list_captures(const std::filesystem::path& dir);

/// Loads every capture of `dir`, skipping empty files. Throws ConfigError if
/// the directory is missing or yields no usable capture.
std::vector<MessageSequence> load_captures(const std::filesystem::path& dir,
                                           const CodecSpec& codec);

}  // namespace protofuzz
