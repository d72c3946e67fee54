#include "protofuzz/fuzzer.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>

#include "protofuzz/capture_io.hpp"
#include "protofuzz/error.hpp"

namespace fs = std::filesystem;

namespace protofuzz {
namespace {

std::uint64_t steady_ns() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                        std::chrono::steady_clock::now().time_since_epoch())
                                        .count());
}

std::string entry_name(std::size_t id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "id_%06zu", id);
  return buf;
}

}  // namespace

CampaignMode parse_campaign_mode(std::string_view text) {
  std::string up;
  for (char c : text) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "FULL") return CampaignMode::kFull;
  if (up == "QUEUE") return CampaignMode::kQueue;
  if (up == "IPSM" || up == "IPSM_ONLY") return CampaignMode::kIpsmOnly;
  if (up == "CODE" || up == "CODE_ONLY") return CampaignMode::kCodeOnly;
  if (up == "DARK") return CampaignMode::kDark;
  if (up == "BLACK") return CampaignMode::kBlack;
  throw ConfigError("unknown mode '" + std::string(text) + "'");
}

std::string_view campaign_mode_name(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kFull: return "FULL";
    case CampaignMode::kQueue: return "QUEUE";
    case CampaignMode::kIpsmOnly: return "IPSM_ONLY";
    case CampaignMode::kCodeOnly: return "CODE_ONLY";
    case CampaignMode::kDark: return "DARK";
    case CampaignMode::kBlack: return "BLACK";
  }
  return "?";
}

FeedbackRegions feedback_regions(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kCodeOnly: return FeedbackRegions::kCode;
    case CampaignMode::kDark: return FeedbackRegions::kState;
    case CampaignMode::kBlack: return FeedbackRegions::kNone;
    default: return FeedbackRegions::kBoth;
  }
}

SelectionPolicy selection_policy(CampaignMode mode) {
  switch (mode) {
    case CampaignMode::kQueue:
    case CampaignMode::kCodeOnly:
    case CampaignMode::kBlack: return SelectionPolicy::kQueueOnly;
    case CampaignMode::kIpsmOnly: return SelectionPolicy::kStateOnly;
    default: return SelectionPolicy::kInterleaved;
  }
}

void CampaignConfig::validate() const {
  geometry.validate();
  scheduler.validate();
  if (!(stats_interval_s > 0)) throw ConfigError("stats interval must be positive");
  if (max_seconds && *max_seconds < 0) throw ConfigError("time budget must not be negative");
  if (mutation.max_message_len == 0 || mutation.max_candidate_messages == 0) {
    throw ConfigError("mutation size limits must be positive");
  }
  if (energy.min_trials == 0 || energy.min_trials > energy.max_trials) {
    throw ConfigError("energy bounds must satisfy 0 < min <= max");
  }
}

std::string format_stats_row(const StatsRow& r) {
  return std::to_string(r.seconds) + ',' + std::to_string(r.total_execs) + ',' +
         std::to_string(r.corpus_size) + ',' + std::to_string(r.branches) + ',' +
         std::to_string(r.states) + ',' + std::to_string(r.transitions) + ',' +
         std::to_string(r.crashes);
}

Campaign::Campaign(CampaignConfig config, TargetAdapter& target)
    : config_(std::move(config)),
      target_(target),
      regions_(feedback_regions(config_.mode)),
      policy_(selection_policy(config_.mode)),
      rng_(config_.scheduler.rng_seed),
      registry_(config_.geometry.state_size),
      bitmap_(config_.geometry),
      crash_bitmap_(config_.geometry),
      trace_(config_.geometry.map_size),
      corpus_(config_.geometry.map_size) {
  config_.validate();
  if (includes_code(regions_) && !target_.reports_code_coverage()) {
    throw ConfigError("mode " + std::string(campaign_mode_name(config_.mode)) +
                      " needs code coverage, which " + target_.describe() + " cannot report");
  }
  wall_start_ns_ = steady_ns();
  if (!config_.out_dir.empty()) {
    const fs::path& out = config_.out_dir;
    if (fs::exists(out) && !fs::is_empty(out)) {
      throw ConfigError("output directory " + out.string() + " is not empty");
    }
    fs::create_directories(out / "queue");
    fs::create_directories(out / "crashes");
    stats_file_.open(out / "stats.csv", std::ios::trunc);
    if (!stats_file_) throw ConfigError("cannot create " + (out / "stats.csv").string());
    stats_file_ << kStatsHeader << '\n';
  }
}

std::uint64_t Campaign::now_us() const {
  if (target_.deterministic_clock()) return stats_.clock_us;
  return (steady_ns() - wall_start_ns_) / 1000;
}

bool Campaign::budget_exhausted() const {
  if (stop_.load(std::memory_order_relaxed)) return true;
  if (config_.max_execs && stats_.total_execs >= *config_.max_execs) return true;
  if (config_.max_seconds && static_cast<double>(now_us()) >= *config_.max_seconds * 1e6) {
    return true;
  }
  return false;
}

Campaign::Executed Campaign::execute(const MessageSequence& seq) {
  Executed ex;
  for (unsigned attempt = 0; attempt <= config_.harness_retries; ++attempt) {
    try {
      ex.outcome = send_sequence(target_, seq, trace_, registry_, config_.geometry);
      ex.ok = true;
      break;
    } catch (const HarnessError& e) {
      ++stats_.harness_errors;
      if (!e.retriable()) throw;
    }
  }
  if (ex.ok && target_.deterministic_clock()) stats_.clock_us += ex.outcome.exec_time_us;
  return ex;
}

std::size_t Campaign::retain(MessageSequence seq, const ExecOutcome& outcome, SeedOrigin origin) {
  annotate(seq, outcome.banner_states, outcome.message_states);
  seq.meta.exec_time_us = outcome.exec_time_us;

  std::vector<std::string_view> labels;
  labels.reserve(outcome.state_seq.size());
  labels.insert(labels.end(), outcome.banner_states.size(), std::string_view{});
  for (std::size_t i = 0; i < outcome.message_states.size(); ++i) {
    labels.insert(labels.end(), outcome.message_states[i].size(), seq.message_view(i));
  }
  ipsm_.update(outcome.state_seq, labels);

  TraceDigest digest = digest_trace(trace_, config_.geometry, regions_);
  SeedEntry entry;
  entry.exec_time_us = outcome.exec_time_us;
  entry.trace_hash = digest.hash;
  entry.trace_indices = std::move(digest.indices);
  entry.found_at_us = now_us();
  entry.origin = origin;
  entry.distinct_states = distinct_states(seq).size();
  pool_.add_sequence(seq);
  entry.seq = std::move(seq);
  const std::size_t id = corpus_.add(std::move(entry));

  std::vector<StateId> seen;
  for (StateId s : outcome.state_seq) {
    if (std::find(seen.begin(), seen.end(), s) != seen.end()) continue;
    seen.push_back(s);
    ipsm_.register_seed(s, id);
  }
  if (!config_.out_dir.empty()) {
    write_file(config_.out_dir / "queue" / entry_name(id), corpus_.at(id).seq.buffer);
  }
  return id;
}

void Campaign::save_crash(const MessageSequence& seq) {
  const std::size_t id = crashes_.size();
  crashes_.push_back({seq, now_us(), stats_.total_execs});
  ++stats_.crashes;
  if (!stats_.first_crash_exec) stats_.first_crash_exec = stats_.total_execs;
  if (!config_.out_dir.empty()) {
    const fs::path file = config_.out_dir / "crashes" / entry_name(id);
    write_file(file, seq.buffer);
    const std::string label = config_.target_label.empty() ? target_.describe() : config_.target_label;
    write_file(meta_path(file), format_crash_meta(crash_meta_for(seq, target_.codec().name, label)));
  }
  if (config_.stop_on_crash) request_stop();
}

void Campaign::preprocess(std::span<const MessageSequence> captures) {
  if (captures.empty()) throw ConfigError("at least one capture is required");
  for (const MessageSequence& capture : captures) {
    if (capture.message_count() == 0) throw ConfigError("capture without messages");
    Executed ex = execute(capture);
    if (!ex.ok) throw HarnessError("initial seed could not be executed against " + target_.describe());
    bitmap_.accumulate(trace_);
    bitmap_.classify(trace_, regions_);
    MessageSequence seq = capture;
    seq.meta.depth = 0;
    retain(std::move(seq), ex.outcome, SeedOrigin::kInitial);
  }
  corpus_.cull();
  stats_.last_path_time_us = now_us();
  preprocessed_ = true;
  refresh_stats();
  maybe_emit_row(true);
}

void Campaign::handle_mutant(MessageSequence seq, std::optional<StateId> target_state) {
  Executed ex = execute(seq);
  if (!ex.ok) return;
  ++stats_.total_execs;
  const ExecOutcome& out = ex.outcome;
  ipsm_.record_fuzz_hits(out.state_seq);
  bitmap_.accumulate(trace_);

  if (out.crashed) {
    if (crash_bitmap_.classify(trace_, FeedbackRegions::kBoth).interesting()) save_crash(seq);
    stats_.last_path_time_us = now_us();
  } else if (bitmap_.classify(trace_, regions_).interesting()) {
    retain(std::move(seq), out, SeedOrigin::kMutated);
    if (target_state) ++ipsm_.stats(*target_state).paths_discovered;
    stats_.last_path_time_us = now_us();
  }
  maybe_emit_row(false);
}

bool Campaign::fuzz_one_cycle() {
  if (!preprocessed_) throw ConfigError("preprocess must run before fuzzing");
  if (budget_exhausted()) return false;
  corpus_.cull();

  bool state_driven = false;
  switch (policy_) {
    case SelectionPolicy::kStateOnly: state_driven = true; break;
    case SelectionPolicy::kQueueOnly: state_driven = false; break;
    case SelectionPolicy::kInterleaved:
      state_driven = pick_mode(now_us(), stats_.last_path_time_us,
                               config_.scheduler.max_time_gap_s) == SelectionMode::kStateDriven;
      break;
  }

  std::optional<StateId> target_state;
  std::optional<std::size_t> idx;
  SplitResult split;
  if (state_driven && !ipsm_.empty()) {
    const StateId s = state_selector_.choose(ipsm_, config_.scheduler.state_algo, rng_);
    idx = choose_sequence_to_state(corpus_, ipsm_, s);
    if (idx) {
      target_state = s;
      split = split_sequence(corpus_.at(*idx).seq, s);
    }
  }
  if (!idx) {
    idx = queue_walker_.next(corpus_, rng_);
    split = random_split(corpus_.at(*idx).seq, rng_);
  }

  SeedEntry& seed = corpus_.at(*idx);
  seed.was_fuzzed = true;
  const std::uint32_t parent_depth = seed.seq.meta.depth;
  const std::uint32_t trials =
      energy(seed, corpus_.average_exec_us(), corpus_.average_bitmap_size(), config_.energy);

  for (std::uint32_t i = 0; i < trials && !budget_exhausted(); ++i) {
    MessageSequence mutant = mutate_split(split, pool_, rng_, config_.mutation);
    mutant.meta.depth = parent_depth + 1;
    handle_mutant(std::move(mutant), target_state);
  }
  ++stats_.cycles;
  refresh_stats();
  return !budget_exhausted();
}

const CampaignStats& Campaign::run() {
  try {
    while (fuzz_one_cycle()) {
    }
  } catch (...) {
    flush();
    throw;
  }
  flush();
  return stats_;
}

void Campaign::refresh_stats() {
  stats_.corpus_size = corpus_.size();
  stats_.branches_covered = bitmap_.code_entries_hit();
  stats_.states_covered = ipsm_.state_count();
  stats_.transitions_covered = ipsm_.transition_count();
  stats_.clock_us = target_.deterministic_clock() ? stats_.clock_us : now_us();
}

void Campaign::maybe_emit_row(bool force) {
  const std::uint64_t now = now_us();
  if (!force && now < next_row_us_) return;
  refresh_stats();
  const auto interval = static_cast<std::uint64_t>(config_.stats_interval_s * 1e6);
  next_row_us_ = (now / interval + 1) * interval;
  StatsRow row{now / 1'000'000,          stats_.total_execs,   stats_.corpus_size,
               stats_.branches_covered,  stats_.states_covered, stats_.transitions_covered,
               stats_.crashes};
  if (!rows_.empty() && rows_.back() == row) return;
  rows_.push_back(row);
  append_row_to_file(row);
}

void Campaign::append_row_to_file(const StatsRow& row) {
  if (!stats_file_.is_open()) return;
  stats_file_ << format_stats_row(row) << '\n';
  stats_file_.flush();
}

void Campaign::flush() {
  if (!preprocessed_) return;
  maybe_emit_row(true);
  if (config_.out_dir.empty()) return;
  write_file(config_.out_dir / "ipsm.dot", export_dot(ipsm_, registry_));
  write_file(config_.out_dir / "state_keys.tsv", registry_.to_tsv());
}

CampaignStats run_campaign(const CampaignConfig& config, TargetAdapter& target,
                           std::span<const MessageSequence> captures) {
  Campaign campaign(config, target);
  campaign.preprocess(captures);
  return campaign.run();
}

}  // namespace protofuzz
