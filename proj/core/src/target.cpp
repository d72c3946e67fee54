#include "protofuzz/target.hpp"

#include <string>

namespace protofuzz {

std::vector<std::uint32_t> response_codes(const CodecSpec& codec, std::string_view response) {
  if (response.empty()) return {};
  std::vector<std::uint32_t> codes = extract_status_codes(codec, response);
  if (codes.empty()) codes.push_back(kUnknownRawCode);
  return codes;
}

void record_state_path(TraceMap& trace, const BitmapGeometry& geometry,
                       std::span<const StateId> state_seq) {
  StateId prev = kInitialState;
  for (StateId cur : state_seq) {
    record_transition(trace, geometry, prev, cur);
    prev = cur;
  }
}

ExecOutcome send_sequence(TargetAdapter& target, const MessageSequence& seq, TraceMap& trace,
                          StateRegistry& registry, const BitmapGeometry& geometry) {
  trace.clear();
  ExecOutcome out = target.exchange(seq, trace);
  out.state_seq.clear();
  out.banner_states.clear();
  for (std::uint32_t raw : out.banner_codes) {
    out.banner_states.push_back(registry.number(raw));
    out.state_seq.push_back(out.banner_states.back());
  }
  out.message_states.assign(out.message_codes.size(), {});
  for (std::size_t i = 0; i < out.message_codes.size(); ++i) {
    for (std::uint32_t raw : out.message_codes[i]) {
      out.message_states[i].push_back(registry.number(raw));
      out.state_seq.push_back(out.message_states[i].back());
    }
  }
  record_state_path(trace, geometry, out.state_seq);
  return out;
}

InProcessTarget::InProcessTarget(BenchTarget target, BitmapGeometry geometry)
    : target_(target),
      geometry_(geometry),
      codec_(&codec_by_name(bench_codec_name(target))),
      server_(make_server(target)) {
  geometry_.validate();
}

std::string InProcessTarget::describe() const {
  return "builtin:" + std::string(bench_target_name(target_));
}

void InProcessTarget::reset() { server_ = make_server(target_); }

ExecOutcome InProcessTarget::exchange(const MessageSequence& seq, TraceMap& trace) {
  reset();
  ExecOutcome out;
  out.exec_time_us = kConnectCostUs;
  auto record = [&](const HandleResult& r) {
    for (const EdgeKey& e : r.edges) record_edge(trace, geometry_, e);
  };

  HandleResult hello = server_->greet();
  record(hello);
  out.banner = std::move(hello.response);
  out.banner_codes = response_codes(*codec_, out.banner);

  for (std::size_t i = 0; i < seq.message_count(); ++i) {
    const std::string_view msg = seq.message_view(i);
    HandleResult r = server_->handle(msg);
    ++out.messages_sent;
    out.exec_time_us += kMessageCostUs + msg.size() / kBytesPerUs;
    record(r);
    if (r.crashed) {
      out.crashed = true;
      break;
    }
    out.message_codes.push_back(response_codes(*codec_, r.response));
    out.responses.push_back(std::move(r.response));
    if (r.closed) break;
  }
  return out;
}

bool InProcessTarget::probe_crash() { return server_->crashed(); }

}  // namespace protofuzz
