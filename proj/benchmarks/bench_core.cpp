#include <benchmark/benchmark.h>

#include "protofuzz/fuzzer.hpp"

using namespace protofuzz;

namespace {

MessageSequence listing() {
  return split_requests(codec_by_name("ftp"), ftp_happy_path_capture());
}

void BM_CodeIndex(benchmark::State& state) {
  std::uint32_t prev = 1;
  std::uint32_t cur = 7;
  for (auto _ : state) {
    benchmark::DoNotOptimize(code_index(prev, cur, kDefaultMapSize, kDefaultShiftSize));
    prev = cur;
    cur = cur * 1103515245u + 12345u;
  }
}
BENCHMARK(BM_CodeIndex);

void BM_Classify(benchmark::State& state) {
  InProcessTarget target(BenchTarget::kFtp, BitmapGeometry{});
  TraceMap trace;
  StateRegistry registry;
  send_sequence(target, listing(), trace, registry, BitmapGeometry{});
  CoverageBitmap bitmap;
  for (auto _ : state) benchmark::DoNotOptimize(bitmap.classify(trace, FeedbackRegions::kBoth));
}
BENCHMARK(BM_Classify);

void BM_InProcessExec(benchmark::State& state) {
  InProcessTarget target(BenchTarget::kFtp, BitmapGeometry{});
  TraceMap trace;
  StateRegistry registry;
  const MessageSequence seq = listing();
  for (auto _ : state) {
    benchmark::DoNotOptimize(send_sequence(target, seq, trace, registry, BitmapGeometry{}));
  }
}
BENCHMARK(BM_InProcessExec);

void BM_Split(benchmark::State& state) {
  InProcessTarget target(BenchTarget::kFtp, BitmapGeometry{});
  TraceMap trace;
  StateRegistry registry;
  MessageSequence seq = listing();
  const ExecOutcome out = send_sequence(target, seq, trace, registry, BitmapGeometry{});
  annotate(seq, out.banner_states, out.message_states);
  const StateId s = *registry.find(226);
  for (auto _ : state) benchmark::DoNotOptimize(split_sequence(seq, s));
}
BENCHMARK(BM_Split);

void BM_Mutate(benchmark::State& state) {
  const MessageSequence seq = listing();
  MessagePool pool;
  pool.add_sequence(seq);
  Rng rng(1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mutate_split(random_split(seq, rng), pool, rng));
  }
}
BENCHMARK(BM_Mutate);

void BM_CampaignThroughput(benchmark::State& state) {
  const std::vector<MessageSequence> seeds{listing()};
  for (auto _ : state) {
    InProcessTarget target(BenchTarget::kFtp, BitmapGeometry{});
    CampaignConfig cfg;
    cfg.max_execs = static_cast<std::uint64_t>(state.range(0));
    benchmark::DoNotOptimize(run_campaign(cfg, target, seeds));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CampaignThroughput)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
