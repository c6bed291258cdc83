#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise {

/// n-stage values and the argmax tables of backward induction.
struct ValueTable {
  std::size_t horizon = 0;
  std::size_t states = 0;
  std::vector<double> values;                   // v_n
  std::vector<std::vector<double>> by_horizon;  // v_1..v_n, empty unless kept
  std::shared_ptr<const std::vector<std::uint32_t>> argmax_flat;  // (t-1)*states + x

  /// Optimal first menu index with `remaining` stages to go.
  std::size_t argmax(std::size_t remaining, std::size_t x) const {
    return (*argmax_flat)[(remaining - 1) * states + x];
  }
  /// Pure Markov strategy optimal for the n-stage problem from every state:
  /// stage m plays argmax(n - m + 1, .). Stages past n repeat the 1-stage rule.
  Strategy optimal_strategy() const;
};

/// Backward induction in sum form, V_t(x) = max_a <r + V_{t-1}, F(x)[a]>,
/// divided by t at the end. Lowest menu index wins ties.
ValueTable value_n(const GamblingHouse& house, std::size_t n, bool keep_all_horizons = true);

/// v := limsup v_n approximated by v_N, N doubled until max_x |v_N - v_2N| < gap_target.
struct ValueProxy {
  std::size_t N = 0;
  double gap = 0.0;  // max_x |v_N - v_2N|
  bool converged = false;
  std::vector<double> v_N;
  /// excess[m-1] = max_x (v_m(x) - v_N(x)) for m = 1..2N.
  std::vector<double> excess;

  /// Smallest n with v_m <= v_N + epsilon for all m in [n, 2N].
  std::size_t stabilization_horizon(double epsilon) const;
};

ValueProxy value_proxy(const GamblingHouse& house, double gap_target = 1e-4,
                       std::size_t max_N = std::size_t{1} << 20);

struct DiscountedValues {
  double lambda = 1.0;
  std::vector<double> values;
  std::vector<std::size_t> policy;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Fixed point of v(x) = max_a sum_y F(x)[a][y] (lambda r(y) + (1 - lambda) v(y)).
DiscountedValues value_discounted(const GamblingHouse& house, double lambda,
                                  std::size_t max_iterations = 20'000'000);

struct OccupationMeasure {
  std::vector<ProbVector> stages;  // z_1..z_n
  ProbVector average;
};

/// Exact forward propagation of the state law under a Markov strategy.
OccupationMeasure occupation(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                             std::size_t n);

/// Gain, bias and limiting matrix of a stationary pure policy.
struct ChainEvaluation {
  std::vector<double> gain;
  std::vector<double> bias;
  std::vector<std::vector<std::size_t>> recurrent_classes;
};

ChainEvaluation evaluate_stationary(const GamblingHouse& house, const std::vector<std::size_t>& choice);

struct VanishingDiscountProbe {
  double lambda = 0.0;
  double max_gap = 0.0;
  double tolerance = 0.0;
  bool ok = false;
};

struct AverageRewardSolution {
  std::vector<double> gain;
  std::vector<double> bias;
  std::vector<std::size_t> choices;
  Strategy policy = Strategy::stationary_pure({});
  std::size_t iterations = 0;
  double optimality_residual = 0.0;  // average-reward optimality equations
  std::vector<VanishingDiscountProbe> probes;
  /// Policy iteration did not terminate; gain extrapolated from discounted values.
  bool fallback = false;
};

struct AverageRewardOptions {
  bool vanishing_discount_check = true;
  std::vector<double> lambdas{1e-3, 1e-4};
  std::size_t max_iterations = 1000;
};

/// Multichain policy iteration over the menu vertices.
AverageRewardSolution solve_average_reward(const GamblingHouse& house,
                                           const AverageRewardOptions& options = {});

struct LipschitzVerdict {
  bool correspondence_ok = true;
  bool payoff_ok = true;
  // First violation of the correspondence: entry a of F(x) has no partner in
  // F(y) within d(x, y).
  std::size_t x = 0, a = 0, y = 0;
  double best_cost = 0.0;
  double distance = 0.0;
  // First payoff pair with |r(x) - r(y)| > d(x, y).
  std::size_t payoff_x = 0, payoff_y = 0;

  bool ok() const { return correspondence_ok && payoff_ok; }
  std::string message() const;
};

LipschitzVerdict check_lipschitz(const GamblingHouse& house);

struct ValueLipschitzVerdict {
  bool ok = true;
  double worst_slack = 0.0;  // max over n, x, y of |v_n(x) - v_n(y)| - d(x, y)
  std::size_t worst_n = 0, worst_x = 0, worst_y = 0;
  bool gain_ok = true;
  double gain_worst_slack = 0.0;
  std::size_t violations = 0;
};

ValueLipschitzVerdict check_value_lipschitz(const GamblingHouse& house, std::size_t n_max,
                                            const std::vector<double>* gain = nullptr);

}  // namespace pathwise
