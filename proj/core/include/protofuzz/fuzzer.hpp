#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "protofuzz/codec.hpp"
#include "protofuzz/corpus.hpp"
#include "protofuzz/coverage.hpp"
#include "protofuzz/ipsm.hpp"
#include "protofuzz/mutation.hpp"
#include "protofuzz/rng.hpp"
#include "protofuzz/scheduler.hpp"
#include "protofuzz/target.hpp"

namespace protofuzz {

/// Feedback and seed-selection variants.
///
///   mode       feedback regions   seed selection
///   FULL       state + code       interleaved (queue, state after a stall)
///   QUEUE      state + code       queue only
///   IPSM_ONLY  state + code       state only
///   CODE_ONLY  code               queue only
///   DARK       state              interleaved
///   BLACK      none               queue over the initial seeds; nothing kept
enum class CampaignMode { kFull, kQueue, kIpsmOnly, kCodeOnly, kDark, kBlack };

enum class SelectionPolicy { kInterleaved, kQueueOnly, kStateOnly };

/// Accepts FULL, QUEUE, IPSM, IPSM_ONLY, CODE, CODE_ONLY, DARK, BLACK (any case).
CampaignMode parse_campaign_mode(std::string_view text);
std::string_view campaign_mode_name(CampaignMode mode);
FeedbackRegions feedback_regions(CampaignMode mode);
SelectionPolicy selection_policy(CampaignMode mode);

struct CampaignConfig {
  CampaignMode mode = CampaignMode::kFull;
  SchedulerConfig scheduler;
  BitmapGeometry geometry;
  MutationConfig mutation;
  EnergyConfig energy;
  /// Fuzzing executions allowed; preprocessing runs are not counted.
  std::optional<std::uint64_t> max_execs;
  /// Campaign-clock seconds allowed.
  std::optional<double> max_seconds;
  /// Stop as soon as the first unique crash is saved.
  bool stop_on_crash = false;
  /// Where queue/, crashes/, ipsm.dot, state_keys.tsv and stats.csv go.
  /// Empty: keep everything in memory.
  std::filesystem::path out_dir;
  double stats_interval_s = 5.0;
  /// Consecutive harness errors tolerated before a cycle is abandoned.
  unsigned harness_retries = 3;
  /// Written into crash sidecars.
  std::string target_label;

  /// Throws ConfigError.
  void validate() const;
};

struct CampaignStats {
  std::uint64_t total_execs = 0;
  std::size_t corpus_size = 0;
  /// Nonzero code-region entries over every execution so far.
  std::size_t branches_covered = 0;
  std::size_t states_covered = 0;
  std::size_t transitions_covered = 0;
  std::size_t crashes = 0;
  std::uint64_t last_path_time_us = 0;
  std::uint64_t clock_us = 0;
  std::uint64_t harness_errors = 0;
  std::uint64_t cycles = 0;
  /// total_execs at the first saved crash.
  std::optional<std::uint64_t> first_crash_exec;
};

/// One stats.csv row.
struct StatsRow {
  std::uint64_t seconds = 0;
  std::uint64_t total_execs = 0;
  std::size_t corpus_size = 0;
  std::size_t branches = 0;
  std::size_t states = 0;
  std::size_t transitions = 0;
  std::size_t crashes = 0;

  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

inline constexpr std::string_view kStatsHeader =
    "unix_time,total_execs,corpus_size,branches,states,transitions,crashes";
std::string format_stats_row(const StatsRow& row);

struct CrashEntry {
  MessageSequence seq;
  std::uint64_t found_at_us = 0;
  std::uint64_t exec_index = 0;
};

/// One fuzzing campaign against one target.
class Campaign {
 public:
  /// Validates `config` and prepares the output directory (which must be
  /// empty or absent). The target must outlive the campaign.
  Campaign(CampaignConfig config, TargetAdapter& target);

  /// Runs every capture once, annotates it, seeds corpus, pool and state
  /// machine. Throws ConfigError when `captures` is empty.
  void preprocess(std::span<const MessageSequence> captures);

  /// One seed selection plus its energy worth of mutants. Returns false
  /// once the budget is spent or a stop was requested.
  bool fuzz_one_cycle();

  /// Loops fuzz_one_cycle and flushes every artifact, also on error.
  const CampaignStats& run();

  /// Safe to call from a signal handler.
  void request_stop() { stop_.store(true, std::memory_order_relaxed); }

  /// Writes ipsm.dot, state_keys.tsv and a final stats row.
  void flush();

  bool budget_exhausted() const;

  const CampaignConfig& config() const { return config_; }
  const CampaignStats& stats() const { return stats_; }
  const Corpus& corpus() const { return corpus_; }
  const Ipsm& ipsm() const { return ipsm_; }
  const StateRegistry& registry() const { return registry_; }
  const CoverageBitmap& bitmap() const { return bitmap_; }
  const MessagePool& pool() const { return pool_; }
  const std::vector<CrashEntry>& crashes() const { return crashes_; }
  const std::vector<StatsRow>& stats_rows() const { return rows_; }

 private:
  struct Executed {
    ExecOutcome outcome;
    bool ok = false;
  };

  Executed execute(const MessageSequence& seq);
  /// Annotates `seq` with the outcome's states and makes it a corpus entry.
  std::size_t retain(MessageSequence seq, const ExecOutcome& outcome, SeedOrigin origin);
  void save_crash(const MessageSequence& seq);
  void handle_mutant(MessageSequence seq, std::optional<StateId> target_state);
  void refresh_stats();
  void maybe_emit_row(bool force);
  void append_row_to_file(const StatsRow& row);
  std::uint64_t now_us() const;

  CampaignConfig config_;
  TargetAdapter& target_;
  FeedbackRegions regions_;
  SelectionPolicy policy_;
  Rng rng_;
  StateRegistry registry_;
  CoverageBitmap bitmap_;
  CoverageBitmap crash_bitmap_;
  TraceMap trace_;
  Corpus corpus_;
  Ipsm ipsm_;
  MessagePool pool_;
  StateSelector state_selector_;
  QueueWalker queue_walker_;
  CampaignStats stats_;
  std::vector<CrashEntry> crashes_;
  std::vector<StatsRow> rows_;
  std::uint64_t next_row_us_ = 0;
  std::uint64_t wall_start_ns_ = 0;
  std::ofstream stats_file_;
  std::atomic<bool> stop_{false};
  bool preprocessed_ = false;
};

/// Convenience wrapper: preprocess + run.
CampaignStats run_campaign(const CampaignConfig& config, TargetAdapter& target,
                           std::span<const MessageSequence> captures);

}  // namespace protofuzz
