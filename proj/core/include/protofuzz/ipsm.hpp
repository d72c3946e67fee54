#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "protofuzz/codec.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz {

/// Scheduling statistics kept per learned state.
struct StateStats {
  /// Mutated sequences whose execution visited the state.
  std::uint64_t fuzz_count = 0;
  /// Times the state was picked as the target state.
  std::uint64_t selected_count = 0;
  /// Corpus additions made while the state was the target.
  std::uint64_t paths_discovered = 0;
};

struct TransitionInfo {
  std::uint64_t hits = 0;
  /// First 32 bytes of the first request seen to take this transition.
  Bytes label_sample;
};

struct IpsmDelta {
  std::size_t new_states = 0;
  std::size_t new_transitions = 0;
};

/// The implemented protocol state machine: states and transitions observed
/// in server responses, plus the state -> corpus index lookup.
class Ipsm {
 public:
  using TransitionKey = std::pair<std::uint32_t, std::uint32_t>;

  /// Inserts the path 0 -> seq[0] -> seq[1] ... . `requests`, if non-empty,
  /// must match `state_seq` in length and names the request behind each
  /// state (used only as the DOT label sample).
  IpsmDelta update(std::span<const StateId> state_seq,
                   std::span<const std::string_view> requests = {});

  /// +1 fuzz_count for every distinct known state in `state_seq`.
  void record_fuzz_hits(std::span<const StateId> state_seq);

  /// Appends `corpus_index` to the state's seed list (deduplicated).
  /// Throws InvalidArgument for a state not in the machine.
  void register_seed(StateId state, std::size_t corpus_index);

  bool contains(StateId state) const { return index_.contains(state); }
  bool empty() const { return states_.empty(); }
  std::size_t state_count() const { return states_.size(); }
  std::size_t transition_count() const { return transitions_.size(); }

  /// States in discovery order.
  std::span<const StateId> states() const { return states_; }
  StateStats& stats(StateId state);
  const StateStats& stats(StateId state) const;

  const std::map<TransitionKey, TransitionInfo>& transitions() const { return transitions_; }
  bool has_transition(StateId from, StateId to) const {
    return transitions_.contains({from.value, to.value});
  }

  /// Corpus indices exercising `state`; empty span for unknown states.
  std::span<const std::size_t> seeds_for(StateId state) const;

 private:
  std::vector<StateId> states_;
  std::vector<StateStats> stats_;
  std::unordered_map<StateId, std::size_t> index_;
  std::map<TransitionKey, TransitionInfo> transitions_;
  std::unordered_map<StateId, std::vector<std::size_t>> seeds_by_state_;
};

/// Graphviz rendering. Nodes are labelled with raw status codes from
/// `registry`; edge labels carry hit counts. The initial state is drawn as a
/// point node named "init".
std::string export_dot(const Ipsm& ipsm, const StateRegistry& registry);

}  // namespace protofuzz
