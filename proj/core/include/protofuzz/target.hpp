#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "protofuzz/bench_targets.hpp"
#include "protofuzz/codec.hpp"
#include "protofuzz/coverage.hpp"
#include "protofuzz/message.hpp"

namespace protofuzz {

/// Result of replaying one sequence against a fresh target.
struct ExecOutcome {
  /// Unprompted greeting, empty when the server sent none.
  Bytes banner;
  /// One entry per answered message, in send order. A message that crashed
  /// the server has no entry.
  std::vector<Bytes> responses;
  std::vector<std::uint32_t> banner_codes;
  /// Raw status codes parsed from each entry of `responses`.
  std::vector<std::vector<std::uint32_t>> message_codes;
  /// Dense keys for banner_codes followed by every message_codes entry.
  /// Filled by send_sequence.
  std::vector<StateId> state_seq;
  std::vector<StateId> banner_states;
  std::vector<std::vector<StateId>> message_states;
  std::size_t messages_sent = 0;
  bool crashed = false;
  std::uint64_t exec_time_us = 0;
};

/// An execution backend. Implementations write code edges into the trace
/// they are handed; state-region entries are added by send_sequence.
class TargetAdapter {
 public:
  virtual ~TargetAdapter() = default;

  virtual const CodecSpec& codec() const = 0;
  /// Whether `exchange` ever records code edges.
  virtual bool reports_code_coverage() const = 0;
  /// Whether exec_time_us is a pure function of the sequence.
  virtual bool deterministic_clock() const = 0;
  virtual std::string describe() const = 0;

  /// Brings the target back to its initial state.
  virtual void reset() = 0;
  /// Sends every message of `seq` in order starting from the initial state
  /// and collects responses and raw status codes. Leaves state ids empty.
  virtual ExecOutcome exchange(const MessageSequence& seq, TraceMap& trace) = 0;
  /// Whether the last exchange left the server dead.
  virtual bool probe_crash() = 0;
};

/// Status codes of one response. Bytes without a parseable code count as the
/// synthetic unknown code; an empty response has no code at all.
std::vector<std::uint32_t> response_codes(const CodecSpec& codec, std::string_view response);

/// Exchanges `seq`, numbers the observed codes through `registry`, and
/// records the resulting state path into the state region of `trace`.
/// `trace` is cleared first.
ExecOutcome send_sequence(TargetAdapter& target, const MessageSequence& seq, TraceMap& trace,
                          StateRegistry& registry, const BitmapGeometry& geometry);

/// Records 0 -> state_seq[0] -> state_seq[1] ... into the state region.
void record_state_path(TraceMap& trace, const BitmapGeometry& geometry,
                       std::span<const StateId> state_seq);

/// Drives a bundled server inside the fuzzer process. A new server instance
/// is built for every exchange. exec_time_us is synthetic: a fixed cost per
/// connection and per message plus a per-byte term.
class InProcessTarget final : public TargetAdapter {
 public:
  static constexpr std::uint64_t kConnectCostUs = 500;
  static constexpr std::uint64_t kMessageCostUs = 1000;
  static constexpr std::uint64_t kBytesPerUs = 16;

  InProcessTarget(BenchTarget target, BitmapGeometry geometry);

  const CodecSpec& codec() const override { return *codec_; }
  bool reports_code_coverage() const override { return true; }
  bool deterministic_clock() const override { return true; }
  std::string describe() const override;

  void reset() override;
  ExecOutcome exchange(const MessageSequence& seq, TraceMap& trace) override;
  bool probe_crash() override;

  BenchTarget target() const { return target_; }

 private:
  BenchTarget target_;
  BitmapGeometry geometry_;
  const CodecSpec* codec_;
  std::unique_ptr<ProtocolServer> server_;
};

}  // namespace protofuzz
