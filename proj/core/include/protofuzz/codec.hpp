#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "protofuzz/message.hpp"

namespace protofuzz {

/// Messages end with a fixed byte string (e.g. CRLF for FTP).
struct TerminatorRule {
  Bytes terminator;
};

/// Messages start with a big-endian payload length of `width` bytes.
struct LengthPrefixRule {
  unsigned width = 2;
};

/// Status code is a run of 1..max_digits decimal digits at a line start.
struct LeadingDecimalRule {
  unsigned max_digits = 3;
};

/// Status code is `width` ASCII digits at `offset` in each response unit.
struct FixedOffsetRule {
  std::size_t offset = 0;
  std::size_t width = 3;
};

using BoundaryRule = std::variant<TerminatorRule, LengthPrefixRule>;
using StatusRule = std::variant<LeadingDecimalRule, FixedOffsetRule>;

struct CodecSpec {
  std::string name;
  BoundaryRule boundary_rule;
  StatusRule status_rule;
  /// Separates response units for FixedOffsetRule (e.g. "\r\n\r\n" for RTSP).
  Bytes response_separator = "\r\n";
  /// Server sends a greeting before the first request.
  bool expects_banner = false;
};

/// Synthetic raw code for responses that carry no parseable status.
inline constexpr std::uint32_t kUnknownRawCode = 0;

void validate(const CodecSpec& codec);

/// Built-in codecs: "ftp", "smtp", "rtsp". Throws ConfigError otherwise.
const CodecSpec& codec_by_name(std::string_view name);
std::vector<std::string> codec_names();

/// Partitions a captured request stream into messages. Trailing bytes
/// without a complete frame form a final region flagged `incomplete`.
MessageSequence split_requests(const CodecSpec& codec, std::string_view raw);

/// Every status code found in `response`, in order. Never throws.
std::vector<std::uint32_t> extract_status_codes(const CodecSpec& codec,
                                                std::string_view response) noexcept;

/// Maps raw status codes to dense state keys 1..n in first-seen order.
class StateRegistry {
 public:
  explicit StateRegistry(std::uint32_t state_size = 256);

  /// Existing key for `raw_code`, or the next free one. Keys run from 1 to
  /// state_size - 1; asking for one more throws StateSpaceExhausted.
  StateId number(std::uint32_t raw_code);
  std::optional<StateId> find(std::uint32_t raw_code) const;
  /// Raw code for a key; the initial state maps to nullopt.
  std::optional<std::uint32_t> raw_code(StateId id) const;

  std::uint32_t state_size() const { return state_size_; }
  std::size_t size() const { return raw_by_key_.size(); }

  /// "raw_code<TAB>key" lines in key order.
  std::string to_tsv() const;

 private:
  std::uint32_t state_size_;
  std::unordered_map<std::uint32_t, StateId> key_by_raw_;
  std::vector<std::uint32_t> raw_by_key_;
};

inline StateId number_state(std::uint32_t raw_code, StateRegistry& registry) {
  return registry.number(raw_code);
}

}  // namespace protofuzz
