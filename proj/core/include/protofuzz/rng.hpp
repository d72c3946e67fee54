#pragma once

#include <cstdint>
#include <random>

namespace protofuzz {

/// Campaign random stream. Everything random in a campaign draws from one of
/// these so a fixed seed reproduces the whole run.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound) {
    // Lemire's multiply-shift; stable across standard libraries, unlike
    // std::uniform_int_distribution.
    __extension__ using U128 = unsigned __int128;
    const U128 product = static_cast<U128>(engine_()) * bound;
    return static_cast<std::uint64_t>(product >> 64);
  }

  /// Uniform in [lo, hi] inclusive.
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    return lo + below(hi - lo + 1);
  }

  /// Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return unit() < p; }

  /// Independent child stream; the parent advances by one draw.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace protofuzz
