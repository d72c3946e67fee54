#include "protofuzz/experiment.hpp"

#include <iomanip>
#include <numeric>
#include <sstream>

#include "protofuzz/capture_io.hpp"
#include "protofuzz/error.hpp"

namespace fs = std::filesystem;

namespace protofuzz {

double a12(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) throw InvalidArgument("A12 needs two non-empty groups");
  double wins = 0;
  for (double a : x) {
    for (double b : y) {
      if (a > b) {
        wins += 1.0;
      } else if (a == b) {
        wins += 0.5;
      }
    }
  }
  return wins / (static_cast<double>(x.size()) * static_cast<double>(y.size()));
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

template <class F>
std::vector<double> collect(const std::vector<TrialResult>& trials, F field) {
  std::vector<double> out;
  out.reserve(trials.size());
  for (const TrialResult& t : trials) out.push_back(static_cast<double>(field(t.stats)));
  return out;
}

}  // namespace

std::vector<double> ModeResult::branches() const {
  return collect(trials, [](const CampaignStats& s) { return s.branches_covered; });
}
std::vector<double> ModeResult::states() const {
  return collect(trials, [](const CampaignStats& s) { return s.states_covered; });
}
std::vector<double> ModeResult::transitions() const {
  return collect(trials, [](const CampaignStats& s) { return s.transitions_covered; });
}

void ExperimentConfig::validate() const {
  if (modes.size() < 2) throw ConfigError("an experiment needs at least two modes");
  if (trials < 3) throw ConfigError("an experiment needs at least three trials per mode");
  if (!campaign.max_execs && !campaign.max_seconds) {
    throw ConfigError("an experiment needs an execution or time budget");
  }
  campaign.validate();
}

std::string format_summary_tsv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "mode\ttrials\tmean_branches\tmean_states\ta12_vs_baseline\tmean_transitions\t"
        "a12_transitions_vs_baseline\ta12_branches_vs_baseline\n";
  os << std::fixed << std::setprecision(4);
  if (result.modes.empty()) return os.str();
  const ModeResult& base = result.modes.front();
  for (const ModeResult& m : result.modes) {
    auto vs_base = [&](const std::vector<double>& mine, const std::vector<double>& theirs) {
      return mine.empty() || theirs.empty() ? 0.5 : a12(mine, theirs);
    };
    os << campaign_mode_name(m.mode) << '\t' << m.trials.size() << '\t' << mean(m.branches())
       << '\t' << mean(m.states()) << '\t' << vs_base(m.states(), base.states()) << '\t'
       << mean(m.transitions()) << '\t' << vs_base(m.transitions(), base.transitions()) << '\t'
       << vs_base(m.branches(), base.branches()) << '\n';
  }
  return os.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config, const TargetFactory& make_target,
                                std::span<const MessageSequence> captures,
                                const TrialCallback& on_trial) {
  config.validate();
  ExperimentResult result;
  auto write_summary = [&] {
    if (config.out_dir.empty()) return;
    fs::create_directories(config.out_dir);
    write_file(config.out_dir / "summary.tsv", format_summary_tsv(result));
  };
  try {
    for (CampaignMode mode : config.modes) {
      result.modes.push_back({mode, {}});
      for (unsigned t = 0; t < config.trials; ++t) {
        CampaignConfig cfg = config.campaign;
        cfg.mode = mode;
        cfg.scheduler.rng_seed = config.base_seed + t;
        cfg.out_dir.clear();
        if (!config.out_dir.empty()) {
          cfg.out_dir = config.out_dir / std::string(campaign_mode_name(mode)) /
                        ("trial_" + std::to_string(t));
        }
        std::unique_ptr<TargetAdapter> target = make_target();
        const CampaignStats stats = run_campaign(cfg, *target, captures);
        result.modes.back().trials.push_back({cfg.scheduler.rng_seed, stats});
        if (on_trial) on_trial(mode, t, stats);
      }
      write_summary();
    }
  } catch (...) {
    write_summary();
    throw;
  }
  return result;
}

}  // namespace protofuzz
