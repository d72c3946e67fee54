#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protofuzz {

/// Raw protocol bytes. Text protocols dominate, so std::string is used as the
/// byte container; embedded NULs are fine.
using Bytes = std::string;

/// Dense state key. 0 is the implicit initial state; learned states start at 1.
struct StateId {
  std::uint32_t value = 0;

  constexpr auto operator<=>(const StateId&) const = default;
  constexpr bool is_initial() const { return value == 0; }
};

inline constexpr StateId kInitialState{0};

/// One request message. Never empty.
class Message {
 public:
  explicit Message(Bytes bytes);

  const Bytes& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

  friend bool operator==(const Message&, const Message&) = default;

 private:
  Bytes bytes_;
};

/// Byte range of one message inside a sequence buffer plus the cumulative
/// list of states seen in responses up to and including that message.
struct Region {
  std::size_t start = 0;
  std::size_t end = 0;
  std::vector<StateId> states_observed;
  /// Set by the request splitter when the trailing bytes had no terminator.
  bool incomplete = false;

  std::size_t length() const { return end - start; }
  friend bool operator==(const Region&, const Region&) = default;
};

struct SequenceMeta {
  std::uint64_t exec_time_us = 0;
  std::uint32_t depth = 0;
};

/// A session: messages concatenated in one buffer and addressed by regions.
struct MessageSequence {
  Bytes buffer;
  std::vector<Region> regions;
  SequenceMeta meta;

  std::size_t length() const { return buffer.size(); }
  std::size_t message_count() const { return regions.size(); }
  std::string_view message_view(std::size_t i) const;

  /// Builds an unannotated sequence; every message must be non-empty.
  static MessageSequence from_messages(std::span<const Bytes> messages);
  static MessageSequence from_messages(std::span<const Message> messages);
};

/// Region-sliced messages in order.
std::vector<Message> messages_of(const MessageSequence& seq);

/// Shifts region boundaries after the length of region `from_region`
/// changed by `delta` bytes. Annotations are untouched. Throws
/// InvalidArgument if a region would become empty or the index is bad.
MessageSequence reindex(MessageSequence seq, std::size_t from_region,
                        std::ptrdiff_t delta);

/// Throws InvalidArgument describing the first violated invariant.
void validate(const MessageSequence& seq);

/// Distinct states across all annotations, in first-seen order.
std::vector<StateId> distinct_states(const MessageSequence& seq);

/// Replaces per-region annotations with cumulative prefixes of `per_message`.
/// `per_message[i]` holds the states observed in the response to message i;
/// `leading` (banner states) are attributed to the first message.
void annotate(MessageSequence& seq, std::span<const StateId> leading,
              std::span<const std::vector<StateId>> per_message);

}  // namespace protofuzz

template <>
struct std::hash<protofuzz::StateId> {
  std::size_t operator()(protofuzz::StateId id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value);
  }
};
