#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "protofuzz/message.hpp"
#include "protofuzz/rng.hpp"

namespace protofuzz {

/// Deduplicated messages from every corpus sequence. Only ever grows.
class MessagePool {
 public:
  /// Returns true if the message was new.
  bool add(const Message& message);
  void add_sequence(const MessageSequence& seq);

  bool contains(std::string_view bytes) const { return seen_.contains(std::string(bytes)); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const Message& at(std::size_t i) const { return entries_.at(i); }

 private:
  std::vector<Message> entries_;
  std::unordered_set<Bytes> seen_;
};

/// Prefix reaching the target state, candidate part to mutate, suffix.
struct SplitResult {
  std::vector<Message> m1;
  std::vector<Message> m2;
  std::vector<Message> m3;
};

/// Splits around `state` using the stored annotations only. m1 ends at the
/// first message whose cumulative annotation contains the state; m2 is the
/// longest run after it whose annotations add no state to those seen at the
/// end of m1 (possibly empty); m3 is the rest. Throws InvalidArgument when
/// the state was never observed.
SplitResult split_sequence(const MessageSequence& seq, StateId state);

/// m2 = messages [start, start + count); everything before is m1.
SplitResult split_at(const MessageSequence& seq, std::size_t start, std::size_t count);

/// Queue-driven split: m2 is a random non-empty contiguous run.
SplitResult random_split(const MessageSequence& seq, Rng& rng);

enum class MutationOp : std::uint8_t {
  kMsgReplace,
  kMsgInsert,
  kMsgDuplicate,
  kMsgDelete,
  kBitFlip,
  kByteSet,
  kBlockInsert,
  kBlockDelete,
  kInterestingValue,
};

inline constexpr std::array<MutationOp, 9> kAllMutationOps = {
    MutationOp::kMsgReplace, MutationOp::kMsgInsert,  MutationOp::kMsgDuplicate,
    MutationOp::kMsgDelete,  MutationOp::kBitFlip,    MutationOp::kByteSet,
    MutationOp::kBlockInsert, MutationOp::kBlockDelete, MutationOp::kInterestingValue,
};

constexpr bool is_protocol_aware(MutationOp op) {
  return op == MutationOp::kMsgReplace || op == MutationOp::kMsgInsert ||
         op == MutationOp::kMsgDuplicate || op == MutationOp::kMsgDelete;
}

std::string_view mutation_op_name(MutationOp op);

struct MutationConfig {
  /// Probability that a stacked step draws a message-level operator.
  double protocol_aware_ratio = 0.5;
  /// Stack depth is 2^(1 + uniform[0, max_stack_log2)).
  unsigned max_stack_log2 = 7;
  /// Re-draws allowed when a drawn operator cannot apply.
  unsigned max_redraws = 16;
  std::size_t max_message_len = 1024;
  std::size_t max_candidate_messages = 64;
  /// Upper bound on the bytes added by one block insertion.
  std::size_t max_block_len = 32;
};

std::uint32_t draw_stack_depth(Rng& rng, const MutationConfig& cfg = {});

/// Applies one operator to `m2` in place. Returns false (leaving `m2`
/// untouched) when it cannot apply: no message to work on, empty pool,
/// a size limit, or a deletion that would empty `m2` while `may_empty` is
/// false.
bool apply_mutation(MutationOp op, std::vector<Message>& m2, const MessagePool& pool, Rng& rng,
                    bool may_empty, const MutationConfig& cfg = {});

/// Stacks `stack_depth` operators drawn from `ops` (all operators if empty).
std::vector<Message> mutate_candidate(std::vector<Message> m2, const MessagePool& pool, Rng& rng,
                                      std::uint32_t stack_depth, bool may_empty,
                                      const MutationConfig& cfg = {},
                                      std::span<const MutationOp> ops = {});

/// m1 + m2 + m3 as an unannotated sequence.
MessageSequence assemble(const SplitResult& split, std::span<const Message> m2);

/// One mutant of a prepared split with a freshly drawn stack depth.
MessageSequence mutate_split(const SplitResult& split, const MessagePool& pool, Rng& rng,
                             const MutationConfig& cfg = {});

/// split_sequence followed by mutate_split.
MessageSequence mutate(const MessageSequence& seq, StateId state, const MessagePool& pool,
                       Rng& rng, const MutationConfig& cfg = {});

}  // namespace protofuzz
