#pragma once

#include <cstdint>
#include <vector>

#include "pathwise/errors.hpp"
#include "pathwise/house.hpp"
#include "pathwise/rng.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise {

/// x_0..x_T, payoffs r(x_1)..r(x_T) and their prefix means.
struct Trajectory {
  std::vector<std::size_t> states;
  std::vector<double> payoffs;
  std::vector<double> running_averages;

  std::size_t horizon() const { return payoffs.size(); }
};

/// Menu index drawn at stage m; slot 0 of the stage counter.
inline std::size_t draw_action(const Decision& d, std::size_t menu_size, const CounterRng& rng,
                               std::uint64_t stage) {
  const std::size_t a = d.is_pure() ? d.index : rng.sample(d.weights, stage, 0);
  if (a >= menu_size || (!d.is_pure() && d.weights.size() != menu_size))
    throw StrategyUndefined("strategy chose an invalid menu index at stage " + std::to_string(stage));
  return a;
}

/// Streams one play of the house. on_stage(m, a, x_m) is called for m = 1..horizon.
template <class OnStage>
void run_path(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
              std::size_t horizon, const CounterRng& rng, OnStage&& on_stage) {
  std::vector<std::size_t> history;
  history.reserve(horizon + 1);
  history.push_back(x0);
  std::size_t x = x0;
  for (std::size_t m = 1; m <= horizon; ++m) {
    const std::size_t a = draw_action(strategy.decide(history), house.menu_size(x), rng, m);
    const auto& e = house.sparse(x, a);
    x = e.targets[rng.sample(e.probs, m, 1)];
    history.push_back(x);
    on_stage(m, a, x);
  }
}

Trajectory simulate(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                    std::size_t horizon, std::uint64_t seed, std::uint64_t trial = 0);

struct CoupledTrajectory {
  Trajectory x;
  Trajectory y;
  std::vector<double> distances;  // d(X_m, Y_m), m = 0..T
};

/// Drives the X side with a strategy and the Y side with the coupling
/// selector; successor pairs are drawn from optimal couplings. Selector
/// results are precomputed per (x, a, y) so one instance serves many seeds.
class CoupledSimulator {
 public:
  /// Throws LipschitzViolation when the house correspondence is not 1-Lipschitz.
  explicit CoupledSimulator(GamblingHouse house);

  CoupledTrajectory run(std::size_t x0, std::size_t y0, const Strategy& strategy,
                        std::size_t horizon, std::uint64_t seed, std::uint64_t trial = 0) const;

  const GamblingHouse& house() const { return house_; }

 private:
  struct PairLaw {
    std::size_t y_index;
    std::vector<std::size_t> to_x;
    std::vector<std::size_t> to_y;
    std::vector<double> prob;
  };
  const PairLaw& law(std::size_t x, std::size_t a, std::size_t y) const;

  GamblingHouse house_;
  std::vector<std::size_t> offset_;  // offset_[x] + a indexes (x,a)
  std::vector<PairLaw> laws_;
};

CoupledTrajectory couple_simulate(const GamblingHouse& house, std::size_t x0, std::size_t y0,
                                  const Strategy& strategy, std::size_t horizon, std::uint64_t seed);

}  // namespace pathwise
