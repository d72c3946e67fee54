#include "protofuzz/message.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "protofuzz/error.hpp"

namespace protofuzz {

Message::Message(Bytes bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty()) throw InvalidArgument("message must not be empty");
}

std::string_view MessageSequence::message_view(std::size_t i) const {
  const Region& r = regions.at(i);
  return std::string_view(buffer).substr(r.start, r.length());
}

MessageSequence MessageSequence::from_messages(std::span<const Bytes> messages) {
  MessageSequence seq;
  for (const Bytes& m : messages) {
    if (m.empty()) throw InvalidArgument("message must not be empty");
    Region r;
    r.start = seq.buffer.size();
    seq.buffer += m;
    r.end = seq.buffer.size();
    seq.regions.push_back(std::move(r));
  }
  return seq;
}

MessageSequence MessageSequence::from_messages(std::span<const Message> messages) {
  std::vector<Bytes> raw;
  raw.reserve(messages.size());
  for (const Message& m : messages) raw.push_back(m.bytes());
  return from_messages(std::span<const Bytes>(raw));
}

std::vector<Message> messages_of(const MessageSequence& seq) {
  std::vector<Message> out;
  out.reserve(seq.regions.size());
  for (std::size_t i = 0; i < seq.regions.size(); ++i) {
    out.emplace_back(Bytes(seq.message_view(i)));
  }
  return out;
}

MessageSequence reindex(MessageSequence seq, std::size_t from_region,
                        std::ptrdiff_t delta) {
  if (from_region >= seq.regions.size()) {
    throw InvalidArgument("reindex: region index out of range");
  }
  if (delta == 0) return seq;
  Region& changed = seq.regions[from_region];
  const auto new_len = static_cast<std::ptrdiff_t>(changed.length()) + delta;
  if (new_len <= 0) throw InvalidArgument("reindex: region would become empty");
  changed.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(changed.end) + delta);
  for (std::size_t i = from_region + 1; i < seq.regions.size(); ++i) {
    Region& r = seq.regions[i];
    r.start = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.start) + delta);
    r.end = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(r.end) + delta);
  }
  return seq;
}

void validate(const MessageSequence& seq) {
  auto fail = [](const std::string& msg) { throw InvalidArgument("invalid sequence: " + msg); };
  if (seq.regions.empty()) fail("no regions");
  if (seq.regions.front().start != 0) fail("first region does not start at 0");
  if (seq.regions.back().end != seq.buffer.size()) fail("regions do not cover the buffer");
  for (std::size_t i = 0; i < seq.regions.size(); ++i) {
    const Region& r = seq.regions[i];
    if (r.start >= r.end) {
      std::ostringstream os;
      os << "region " << i << " is empty";
      fail(os.str());
    }
    if (i + 1 < seq.regions.size()) {
      const Region& next = seq.regions[i + 1];
      if (r.end != next.start) fail("regions are not contiguous");
      if (next.states_observed.size() < r.states_observed.size() ||
          !std::equal(r.states_observed.begin(), r.states_observed.end(),
                      next.states_observed.begin())) {
        fail("annotations are not cumulative");
      }
    }
  }
}

std::vector<StateId> distinct_states(const MessageSequence& seq) {
  std::vector<StateId> out;
  if (seq.regions.empty()) return out;
  std::unordered_set<StateId> seen;
  // Annotations are cumulative, so the last region carries everything.
  for (StateId s : seq.regions.back().states_observed) {
    if (seen.insert(s).second) out.push_back(s);
  }
  return out;
}

void annotate(MessageSequence& seq, std::span<const StateId> leading,
              std::span<const std::vector<StateId>> per_message) {
  std::vector<StateId> running(leading.begin(), leading.end());
  for (std::size_t i = 0; i < seq.regions.size(); ++i) {
    if (i < per_message.size()) {
      running.insert(running.end(), per_message[i].begin(), per_message[i].end());
    }
    seq.regions[i].states_observed = running;
  }
}

}  // namespace protofuzz
