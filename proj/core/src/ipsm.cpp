#include "protofuzz/ipsm.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "protofuzz/error.hpp"

namespace protofuzz {
namespace {

constexpr std::size_t kLabelSampleBytes = 32;

std::string dot_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\r': out += "\\\\r"; break;
      case '\n': out += "\\\\n"; break;
      default:
        if (ch < 0x20 || ch >= 0x7f) {
          static constexpr char kHex[] = "0123456789abcdef";
          out += "\\\\x";
          out += kHex[ch >> 4];
          out += kHex[ch & 0xf];
        } else {
          out += static_cast<char>(ch);
        }
    }
  }
  return out;
}

std::string node_name(std::uint32_t key) {
  return key == 0 ? std::string("init") : "s" + std::to_string(key);
}

}  // namespace

IpsmDelta Ipsm::update(std::span<const StateId> state_seq,
                       std::span<const std::string_view> requests) {
  if (!requests.empty() && requests.size() != state_seq.size()) {
    throw InvalidArgument("ipsm update: request labels do not match state sequence");
  }
  IpsmDelta delta;
  StateId prev = kInitialState;
  for (std::size_t i = 0; i < state_seq.size(); ++i) {
    const StateId cur = state_seq[i];
    if (cur.is_initial()) throw InvalidArgument("ipsm update: state 0 is reserved");
    if (!index_.contains(cur)) {
      index_.emplace(cur, states_.size());
      states_.push_back(cur);
      stats_.emplace_back();
      ++delta.new_states;
    }
    auto [it, inserted] = transitions_.try_emplace({prev.value, cur.value});
    if (inserted) {
      ++delta.new_transitions;
      if (!requests.empty()) {
        it->second.label_sample = Bytes(requests[i].substr(0, kLabelSampleBytes));
      }
    }
    ++it->second.hits;
    prev = cur;
  }
  return delta;
}

void Ipsm::record_fuzz_hits(std::span<const StateId> state_seq) {
  std::unordered_set<StateId> seen;
  for (StateId s : state_seq) {
    if (!seen.insert(s).second) continue;
    if (auto it = index_.find(s); it != index_.end()) ++stats_[it->second].fuzz_count;
  }
}

void Ipsm::register_seed(StateId state, std::size_t corpus_index) {
  if (!index_.contains(state)) {
    throw InvalidArgument("register_seed: state " + std::to_string(state.value) +
                          " is not in the state machine");
  }
  auto& list = seeds_by_state_[state];
  if (std::find(list.begin(), list.end(), corpus_index) == list.end()) {
    list.push_back(corpus_index);
  }
}

StateStats& Ipsm::stats(StateId state) {
  auto it = index_.find(state);
  if (it == index_.end()) throw InvalidArgument("unknown state " + std::to_string(state.value));
  return stats_[it->second];
}

const StateStats& Ipsm::stats(StateId state) const {
  return const_cast<Ipsm*>(this)->stats(state);
}

std::span<const std::size_t> Ipsm::seeds_for(StateId state) const {
  auto it = seeds_by_state_.find(state);
  if (it == seeds_by_state_.end()) return {};
  return it->second;
}

std::string export_dot(const Ipsm& ipsm, const StateRegistry& registry) {
  std::ostringstream os;
  os << "digraph ipsm {\n";
  if (!ipsm.empty()) {
    os << "  rankdir=LR;\n";
    os << "  init [shape=point];\n";
    for (StateId s : ipsm.states()) {
      const auto raw = registry.raw_code(s);
      os << "  " << node_name(s.value) << " [label=\""
         << (raw ? std::to_string(*raw) : std::string("?")) << "\"];\n";
    }
    for (const auto& [key, info] : ipsm.transitions()) {
      os << "  " << node_name(key.first) << " -> " << node_name(key.second)
         << " [label=\"" << info.hits << "\"";
      if (!info.label_sample.empty()) {
        os << ", tooltip=\"" << dot_escape(info.label_sample) << "\"";
      }
      os << "];\n";
    }
  }
  os << "}\n";
  return os.str();
}

}  // namespace protofuzz
