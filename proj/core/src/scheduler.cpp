#include "protofuzz/scheduler.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "protofuzz/error.hpp"

namespace protofuzz {

StateAlgo parse_state_algo(std::string_view text) {
  std::string up;
  for (char c : text) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::replace(up.begin(), up.end(), '-', '_');
  if (up == "FAVOR" || up == "3") return StateAlgo::kFavor;
  if (up == "RANDOM" || up == "1") return StateAlgo::kRandom;
  if (up == "ROUND_ROBIN" || up == "2") return StateAlgo::kRoundRobin;
  throw ConfigError("unknown state selection algorithm '" + std::string(text) + "'");
}

std::string_view state_algo_name(StateAlgo algo) {
  switch (algo) {
    case StateAlgo::kFavor: return "FAVOR";
    case StateAlgo::kRandom: return "RANDOM";
    case StateAlgo::kRoundRobin: return "ROUND_ROBIN";
  }
  return "?";
}

void SchedulerConfig::validate() const {
  if (!(max_time_gap_s > 0)) throw ConfigError("max_time_gap must be positive");
}

double favor_score(const StateStats& s) {
  return static_cast<double>(s.paths_discovered + 1) /
         (static_cast<double>(s.selected_count + 1) * static_cast<double>(s.fuzz_count + 1));
}

StateId StateSelector::choose(Ipsm& ipsm, StateAlgo algo, Rng& rng) {
  const auto states = ipsm.states();
  if (states.empty()) throw InvalidArgument("cannot choose a state from an empty state machine");
  StateId chosen = states.front();
  switch (algo) {
    case StateAlgo::kRandom:
      chosen = states[rng.below(states.size())];
      break;
    case StateAlgo::kRoundRobin:
      chosen = states[cursor_ % states.size()];
      cursor_ = (cursor_ + 1) % states.size();
      break;
    case StateAlgo::kFavor: {
      double total = 0;
      for (StateId s : states) total += favor_score(ipsm.stats(s));
      double pick = rng.unit() * total;
      chosen = states.back();
      for (StateId s : states) {
        pick -= favor_score(ipsm.stats(s));
        if (pick < 0) {
          chosen = s;
          break;
        }
      }
      break;
    }
  }
  ++ipsm.stats(chosen).selected_count;
  return chosen;
}

double sequence_weight(const SeedEntry& e) {
  return static_cast<double>(e.exec_time_us) * static_cast<double>(e.seq.length()) /
         (1.0 + static_cast<double>(e.distinct_states));
}

std::optional<std::size_t> choose_sequence_to_state(const Corpus& corpus, const Ipsm& ipsm,
                                                    StateId state) {
  std::optional<std::size_t> best;
  double best_w = 0;
  for (std::size_t idx : ipsm.seeds_for(state)) {
    if (idx >= corpus.size()) continue;
    const double w = sequence_weight(corpus.at(idx));
    if (!best || w < best_w || (w == best_w && idx < *best)) {
      best = idx;
      best_w = w;
    }
  }
  return best;
}

std::size_t QueueWalker::next(const Corpus& corpus, Rng& rng) {
  if (corpus.empty()) throw InvalidArgument("queue is empty");
  const bool any_favored = corpus.favored_count() > 0;
  for (;;) {
    const std::size_t idx = cursor_ % corpus.size();
    cursor_ = idx + 1;
    if (any_favored && !corpus.at(idx).favored && rng.chance(kSkipNonFavored)) continue;
    return idx;
  }
}

double speed_factor(double r) {
  if (r >= 4.0) return 0.25;
  if (r >= 2.0) return 0.5;
  if (r >= 4.0 / 3.0) return 0.75;
  if (r <= 0.25) return 3.0;
  if (r <= 1.0 / 3.0) return 2.0;
  if (r <= 0.5) return 1.5;
  return 1.0;
}

double bitmap_factor(double r) {
  if (r >= 1.0 / 0.3) return 3.0;
  if (r >= 2.0) return 2.0;
  if (r >= 4.0 / 3.0) return 1.5;
  if (r <= 1.0 / 3.0) return 0.25;
  if (r <= 0.5) return 0.5;
  if (r <= 2.0 / 3.0) return 0.75;
  return 1.0;
}

double depth_factor(std::uint32_t depth) {
  if (depth <= 3) return 1.0;
  if (depth <= 7) return 2.0;
  if (depth <= 13) return 3.0;
  return 4.0;
}

double perf_score(const SeedEntry& e, double avg_exec_us, double avg_bitmap_size,
                  const EnergyConfig& cfg) {
  double score = cfg.base_score;
  if (avg_exec_us > 0) score *= speed_factor(static_cast<double>(e.exec_time_us) / avg_exec_us);
  if (avg_bitmap_size > 0) {
    score *= bitmap_factor(static_cast<double>(e.bitmap_size()) / avg_bitmap_size);
  }
  score *= depth_factor(e.seq.meta.depth);
  return score;
}

std::uint32_t energy(const SeedEntry& e, double avg_exec_us, double avg_bitmap_size,
                     const EnergyConfig& cfg) {
  const double trials = perf_score(e, avg_exec_us, avg_bitmap_size, cfg) * cfg.trials_per_100 / 100.0;
  const double clamped = std::clamp(trials, static_cast<double>(cfg.min_trials),
                                    static_cast<double>(cfg.max_trials));
  return static_cast<std::uint32_t>(clamped);
}

SelectionMode pick_mode(std::uint64_t now_us, std::uint64_t last_path_time_us,
                        double max_time_gap_s) {
  const double gap_s =
      now_us > last_path_time_us ? static_cast<double>(now_us - last_path_time_us) / 1e6 : 0.0;
  return gap_s > max_time_gap_s ? SelectionMode::kStateDriven : SelectionMode::kQueueDriven;
}

}  // namespace protofuzz
