#include "protofuzz/mutation.hpp"

#include <algorithm>
#include <string>

#include "protofuzz/error.hpp"

namespace protofuzz {

bool MessagePool::add(const Message& message) {
  if (!seen_.insert(message.bytes()).second) return false;
  entries_.push_back(message);
  return true;
}

void MessagePool::add_sequence(const MessageSequence& seq) {
  for (std::size_t i = 0; i < seq.message_count(); ++i) add(Message(Bytes(seq.message_view(i))));
}

namespace {

std::vector<Message> slice(const MessageSequence& seq, std::size_t from, std::size_t to) {
  std::vector<Message> out;
  out.reserve(to - from);
  for (std::size_t i = from; i < to; ++i) out.emplace_back(Bytes(seq.message_view(i)));
  return out;
}

bool contains_state(std::span<const StateId> v, StateId s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

constexpr std::int8_t kInteresting8[] = {-128, -1, 0, 1, 16, 32, 64, 100, 127};
constexpr std::int16_t kInteresting16[] = {-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767};
constexpr std::int32_t kInteresting32[] = {INT32_MIN, -100663046, -32769, 32768,
                                           65535,     65536,      100663045, INT32_MAX};

}  // namespace

SplitResult split_sequence(const MessageSequence& seq, StateId state) {
  const std::size_t n = seq.message_count();
  std::size_t k = 0;
  while (k < n && !contains_state(seq.regions[k].states_observed, state)) ++k;
  if (k == n) {
    throw InvalidArgument("state " + std::to_string(state.value) + " is not observed in the sequence");
  }
  const std::vector<StateId>& reached = seq.regions[k].states_observed;
  std::size_t j = k + 1;
  while (j < n) {
    // Annotations are cumulative, so only the entries added by message j
    // can introduce a state.
    const auto& prev = seq.regions[j - 1].states_observed;
    const auto& cur = seq.regions[j].states_observed;
    bool adds_state = false;
    for (std::size_t t = prev.size(); t < cur.size() && !adds_state; ++t) {
      adds_state = !contains_state(reached, cur[t]);
    }
    if (adds_state) break;
    ++j;
  }
  return {slice(seq, 0, k + 1), slice(seq, k + 1, j), slice(seq, j, n)};
}

SplitResult split_at(const MessageSequence& seq, std::size_t start, std::size_t count) {
  const std::size_t n = seq.message_count();
  if (start > n || count > n - start) throw InvalidArgument("split range out of bounds");
  return {slice(seq, 0, start), slice(seq, start, start + count), slice(seq, start + count, n)};
}

SplitResult random_split(const MessageSequence& seq, Rng& rng) {
  const std::size_t n = seq.message_count();
  if (n == 0) throw InvalidArgument("cannot split an empty sequence");
  const std::size_t start = rng.below(n);
  const std::size_t count = 1 + rng.below(n - start);
  return split_at(seq, start, count);
}

std::string_view mutation_op_name(MutationOp op) {
  switch (op) {
    case MutationOp::kMsgReplace: return "msg_replace";
    case MutationOp::kMsgInsert: return "msg_insert";
    case MutationOp::kMsgDuplicate: return "msg_duplicate";
    case MutationOp::kMsgDelete: return "msg_delete";
    case MutationOp::kBitFlip: return "bit_flip";
    case MutationOp::kByteSet: return "byte_set";
    case MutationOp::kBlockInsert: return "block_insert";
    case MutationOp::kBlockDelete: return "block_delete";
    case MutationOp::kInterestingValue: return "interesting_value_overwrite";
  }
  return "?";
}

std::uint32_t draw_stack_depth(Rng& rng, const MutationConfig& cfg) {
  return 1u << (1 + rng.below(std::max(1u, cfg.max_stack_log2)));
}

bool apply_mutation(MutationOp op, std::vector<Message>& m2, const MessagePool& pool, Rng& rng,
                    bool may_empty, const MutationConfig& cfg) {
  const std::size_t n = m2.size();
  switch (op) {
    case MutationOp::kMsgReplace:
      if (n == 0 || pool.empty()) return false;
      m2[rng.below(n)] = pool.at(rng.below(pool.size()));
      return true;
    case MutationOp::kMsgInsert:
      if (pool.empty() || n >= cfg.max_candidate_messages) return false;
      m2.insert(m2.begin() + static_cast<std::ptrdiff_t>(rng.below(n + 1)),
                pool.at(rng.below(pool.size())));
      return true;
    case MutationOp::kMsgDuplicate: {
      if (n == 0 || n >= cfg.max_candidate_messages) return false;
      const std::size_t i = rng.below(n);
      m2.insert(m2.begin() + static_cast<std::ptrdiff_t>(i + 1), m2[i]);
      return true;
    }
    case MutationOp::kMsgDelete:
      if (n == 0 || (n == 1 && !may_empty)) return false;
      m2.erase(m2.begin() + static_cast<std::ptrdiff_t>(rng.below(n)));
      return true;
    default:
      break;
  }

  if (n == 0) return false;
  const std::size_t which = rng.below(n);
  Bytes b = m2[which].bytes();
  switch (op) {
    case MutationOp::kBitFlip: {
      const std::size_t bit = rng.below(b.size() * 8);
      b[bit / 8] = static_cast<char>(static_cast<unsigned char>(b[bit / 8]) ^ (1u << (bit % 8)));
      break;
    }
    case MutationOp::kByteSet: {
      const std::size_t pos = rng.below(b.size());
      b[pos] = static_cast<char>(static_cast<unsigned char>(b[pos]) ^ (1 + rng.below(255)));
      break;
    }
    case MutationOp::kBlockInsert: {
      if (b.size() >= cfg.max_message_len) return false;
      const std::size_t room = cfg.max_message_len - b.size();
      const std::size_t len = 1 + rng.below(std::min(cfg.max_block_len, room));
      Bytes block;
      if (len <= b.size() && rng.chance(0.75)) {
        block = b.substr(rng.below(b.size() - len + 1), len);
      } else {
        block.assign(len, static_cast<char>(rng.below(256)));
      }
      b.insert(rng.below(b.size() + 1), block);
      break;
    }
    case MutationOp::kBlockDelete: {
      if (b.size() < 2) return false;
      const std::size_t len = 1 + rng.below(b.size() - 1);
      b.erase(rng.below(b.size() - len + 1), len);
      break;
    }
    case MutationOp::kInterestingValue: {
      const unsigned width_log = static_cast<unsigned>(rng.below(3));
      const std::size_t width = std::size_t{1} << width_log;
      if (b.size() < width) return false;
      std::uint32_t v = 0;
      if (width == 1) {
        v = static_cast<std::uint8_t>(kInteresting8[rng.below(std::size(kInteresting8))]);
      } else if (width == 2) {
        v = static_cast<std::uint16_t>(kInteresting16[rng.below(std::size(kInteresting16))]);
      } else {
        v = static_cast<std::uint32_t>(kInteresting32[rng.below(std::size(kInteresting32))]);
      }
      const bool big_endian = rng.chance(0.5);
      const std::size_t pos = rng.below(b.size() - width + 1);
      for (std::size_t i = 0; i < width; ++i) {
        const std::size_t shift = big_endian ? 8 * (width - 1 - i) : 8 * i;
        b[pos + i] = static_cast<char>((v >> shift) & 0xff);
      }
      break;
    }
    default:
      return false;
  }
  m2[which] = Message(std::move(b));
  return true;
}

std::vector<Message> mutate_candidate(std::vector<Message> m2, const MessagePool& pool, Rng& rng,
                                      std::uint32_t stack_depth, bool may_empty,
                                      const MutationConfig& cfg, std::span<const MutationOp> ops) {
  constexpr std::array<MutationOp, 4> kMessageOps = {MutationOp::kMsgReplace, MutationOp::kMsgInsert,
                                                     MutationOp::kMsgDuplicate, MutationOp::kMsgDelete};
  constexpr std::array<MutationOp, 5> kByteOps = {MutationOp::kBitFlip, MutationOp::kByteSet,
                                                  MutationOp::kBlockInsert, MutationOp::kBlockDelete,
                                                  MutationOp::kInterestingValue};
  auto draw = [&]() {
    if (!ops.empty()) return ops[rng.below(ops.size())];
    if (rng.chance(cfg.protocol_aware_ratio)) return kMessageOps[rng.below(kMessageOps.size())];
    return kByteOps[rng.below(kByteOps.size())];
  };
  for (std::uint32_t step = 0; step < stack_depth; ++step) {
    for (unsigned attempt = 0; attempt <= cfg.max_redraws; ++attempt) {
      if (apply_mutation(draw(), m2, pool, rng, may_empty, cfg)) break;
    }
  }
  return m2;
}

MessageSequence assemble(const SplitResult& split, std::span<const Message> m2) {
  std::vector<Message> all;
  all.reserve(split.m1.size() + m2.size() + split.m3.size());
  all.insert(all.end(), split.m1.begin(), split.m1.end());
  all.insert(all.end(), m2.begin(), m2.end());
  all.insert(all.end(), split.m3.begin(), split.m3.end());
  return MessageSequence::from_messages(std::span<const Message>(all));
}

MessageSequence mutate_split(const SplitResult& split, const MessagePool& pool, Rng& rng,
                             const MutationConfig& cfg) {
  const bool may_empty = !(split.m1.empty() && split.m3.empty());
  const std::vector<Message> m2 =
      mutate_candidate(split.m2, pool, rng, draw_stack_depth(rng, cfg), may_empty, cfg);
  return assemble(split, m2);
}

MessageSequence mutate(const MessageSequence& seq, StateId state, const MessagePool& pool,
                       Rng& rng, const MutationConfig& cfg) {
  return mutate_split(split_sequence(seq, state), pool, rng, cfg);
}

}  // namespace protofuzz
