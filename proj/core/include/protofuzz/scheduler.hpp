#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "protofuzz/corpus.hpp"
#include "protofuzz/ipsm.hpp"
#include "protofuzz/rng.hpp"

namespace protofuzz {

enum class StateAlgo { kFavor, kRandom, kRoundRobin };

/// Accepts FAVOR/RANDOM/ROUND_ROBIN (any case) or the numeric forms
/// 1 (RANDOM), 2 (ROUND_ROBIN), 3 (FAVOR). Throws ConfigError otherwise.
StateAlgo parse_state_algo(std::string_view text);
std::string_view state_algo_name(StateAlgo algo);

struct SchedulerConfig {
  StateAlgo state_algo = StateAlgo::kFavor;
  /// Seconds of campaign clock without a find before state-driven selection.
  double max_time_gap_s = 60.0;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

/// (paths + 1) / ((selected + 1) * (fuzz + 1)).
double favor_score(const StateStats& stats);

/// Picks target states. Keeps the round-robin cursor between calls.
class StateSelector {
 public:
  /// Chooses a state and bumps its selected_count. Throws InvalidArgument
  /// when the machine has no states.
  StateId choose(Ipsm& ipsm, StateAlgo algo, Rng& rng);

 private:
  std::size_t cursor_ = 0;
};

/// exec_time * length / (1 + distinct states). Lower is better.
double sequence_weight(const SeedEntry& entry);

/// Corpus index of the lowest-weight seed exercising `state`, ties going to
/// the lower index; nullopt when no seed exercises it.
std::optional<std::size_t> choose_sequence_to_state(const Corpus& corpus, const Ipsm& ipsm,
                                                    StateId state);

/// Cyclic walk over the queue. While any entry is favored, a non-favored
/// entry is passed over with probability kSkipNonFavored.
class QueueWalker {
 public:
  static constexpr double kSkipNonFavored = 0.75;

  /// Throws InvalidArgument on an empty corpus.
  std::size_t next(const Corpus& corpus, Rng& rng);

 private:
  std::size_t cursor_ = 0;
};

struct EnergyConfig {
  double base_score = 100.0;
  /// Trials granted per 100 points of score.
  double trials_per_100 = 256.0;
  std::uint32_t min_trials = 8;
  std::uint32_t max_trials = 1024;
};

/// Factor for exec_time / average: slow seeds get less energy (x0.25 at 4x
/// slower), fast ones more (x3 at 4x faster).
double speed_factor(double ratio);
/// Factor for bitmap_size / average: x0.25 for tiny traces up to x3.
double bitmap_factor(double ratio);
/// x1 for depth 0-3, x2 for 4-7, x3 for 8-13, x4 beyond.
double depth_factor(std::uint32_t depth);

double perf_score(const SeedEntry& entry, double avg_exec_us, double avg_bitmap_size,
                  const EnergyConfig& cfg = {});
/// Number of mutants to derive from `entry`, within [min_trials, max_trials].
std::uint32_t energy(const SeedEntry& entry, double avg_exec_us, double avg_bitmap_size,
                     const EnergyConfig& cfg = {});

enum class SelectionMode { kQueueDriven, kStateDriven };

/// State-driven iff more than max_time_gap_s elapsed since the last find.
SelectionMode pick_mode(std::uint64_t now_us, std::uint64_t last_path_time_us,
                        double max_time_gap_s);

}  // namespace protofuzz
