#pragma once

#include <cstdint>
#include <span>

namespace pathwise {

/// Counter-based uniform generator. A draw is a pure function of
/// (seed, trial, stage, slot), so trials can run in any order.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trial)
      : key_(mix(mix(seed ^ 0x9e3779b97f4a7c15ULL) + trial)) {}

  /// Uniform double in [0, 1).
  double uniform(std::uint64_t stage, std::uint32_t slot = 0) const {
    std::uint64_t h = mix(key_ ^ mix(stage * 8 + slot + 0x632be59bd9b4e019ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  /// Inverse-CDF draw from nonnegative weights summing to one.
  std::size_t sample(std::span<const double> weights, std::uint64_t stage,
                     std::uint32_t slot = 0) const {
    double u = uniform(stage, slot);
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      acc += weights[i];
      last = i;
      if (u < acc) return i;
    }
    return last;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t key_;
};

}  // namespace pathwise
