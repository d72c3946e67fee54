#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "protofuzz/fuzzer.hpp"

namespace protofuzz {

/// Vargha-Delaney A12: (#{x > y} + 0.5 * #{x == y}) / (|X| * |Y|).
/// Throws InvalidArgument when either group is empty.
double a12(std::span<const double> x, std::span<const double> y);

/// A12 at or beyond the conventional large-effect thresholds (0.71 / 0.29).
constexpr bool substantial(double a12_value) { return a12_value >= 0.71 || a12_value <= 0.29; }

struct TrialResult {
  std::uint64_t seed = 0;
  CampaignStats stats;
};

struct ModeResult {
  CampaignMode mode = CampaignMode::kFull;
  std::vector<TrialResult> trials;

  std::vector<double> branches() const;
  std::vector<double> states() const;
  std::vector<double> transitions() const;
};

struct ExperimentConfig {
  /// The first mode is the baseline every other mode is compared against.
  std::vector<CampaignMode> modes;
  unsigned trials = 10;
  /// Budget, geometry, scheduler and mutation settings shared by all trials.
  /// Its mode, seed and out_dir are overridden per trial.
  CampaignConfig campaign;
  /// Trial t of every mode runs with seed base_seed + t.
  std::uint64_t base_seed = 1;
  /// Optional: per-trial artifacts under <out_dir>/<MODE>/trial_<t>, plus
  /// summary.tsv (rewritten after every finished mode).
  std::filesystem::path out_dir;

  void validate() const;
};

struct ExperimentResult {
  std::vector<ModeResult> modes;
};

using TargetFactory = std::function<std::unique_ptr<TargetAdapter>()>;
using TrialCallback = std::function<void(CampaignMode, unsigned trial, const CampaignStats&)>;

/// Runs every (mode, trial) campaign in turn. A failing trial stops the
/// matrix; the summary of everything finished so far is still written.
ExperimentResult run_experiment(const ExperimentConfig& config, const TargetFactory& make_target,
                                std::span<const MessageSequence> captures,
                                const TrialCallback& on_trial = {});

double mean(std::span<const double> values);

/// Tab-separated summary: mode, trials, mean_branches, mean_states,
/// a12_vs_baseline (over states), followed by mean_transitions,
/// a12_transitions_vs_baseline and a12_branches_vs_baseline.
std::string format_summary_tsv(const ExperimentResult& result);

}  // namespace protofuzz
