#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/invariant.hpp"
#include "pathwise/strategy.hpp"
#include "pathwise/value.hpp"

namespace pathwise {

using Modulus = std::function<double(double)>;

struct GammaOptions {
  /// The liminf proxy is min over n in [max(1, ceil(f T)), T] of the running average.
  double window_start_fraction = 0.1;
  std::size_t threads = 1;
};

struct GammaEstimate {
  std::size_t horizon = 0;
  std::size_t trials = 0;
  std::size_t window_start = 1;
  double mean = 0.0;
  double se = 0.0;
  double ci_low = 0.0, ci_high = 0.0;  // normal approximation, 95%
  std::vector<double> minima;          // per-trial liminf proxies
  double final_mean = 0.0;             // mean running average at T (gamma_T estimate)
  double final_se = 0.0;
};

GammaEstimate estimate_gamma_inf(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                                 std::size_t T, std::size_t trials, std::uint64_t seed,
                                 const GammaOptions& options = {});

struct SynthesisParams {
  double epsilon = 0.1;
  /// Required for houses that fail check_lipschitz; identity otherwise.
  std::optional<Modulus> modulus;
  /// Overrides eps' = eps^3 for the invariant certificate.
  std::optional<double> epsilon_prime;
  std::size_t horizon = 100'000;  // T
  std::size_t trials = 500;
  std::uint64_t seed = 1;
  GammaOptions gamma;
  InvariantOptions invariant;
  bool simulate = true;
};

struct SynthesisReport {
  std::size_t x0 = 0;
  double epsilon = 0.0;
  double epsilon_prime = 0.0;
  bool lipschitz = false;
  std::size_t n0 = 0, n1 = 0, n2 = 0, n3 = 0;
  InvariantCertificate certificate;
  std::vector<std::size_t> set_B;
  std::vector<std::size_t> set_A;
  /// cell[x] = nearest point of B for x in A (lowest index on ties).
  std::vector<std::optional<std::size_t>> cell;
  std::vector<double> z_n3;
  double z_n3_outside_A = 0.0;    // z_{n3}(A^c)
  double pre_switch_value = 0.0;  // <v_N, z_{n3}>
  AverageRewardSolution average_reward;
  double predicted_gamma_inf = 0.0;  // <gain, z_{n3}>, exact for the assembled strategy
  Strategy strategy = Strategy::stationary_pure({});
  std::optional<GammaEstimate> gamma;
  double v_estimate = 0.0;  // v_N(x0)
  double eta_3eps = 0.0;

  bool structure_ok() const;     // n2 formula, 1 <= n3 <= n2, B in A, z_{n3}(A^c) <= eps
  bool pre_switch_ok() const;    // <v_N, z_{n3}> >= v_N(x0) - 3 eps - 2/N
  bool end_to_end_ok() const;    // gamma >= v_N(x0) - 5 eps - 2 eta(3 eps) - 3 SE
  bool gain_oracle_ok() const;   // gamma >= gain(x0) - eps - 3 SE
};

SynthesisReport synthesize(const GamblingHouse& house, std::size_t x0, const SynthesisParams& params);

/// Long-run average continuation from y_state toward a support point of mu*.
/// In the finite engine this is the gain-optimal stationary policy.
Strategy junction_strategy(const GamblingHouse& house, std::size_t y_state, std::size_t target_state,
                           const AverageRewardSolution* solution = nullptr);

struct ExampleArtifact {
  GamblingHouse house;
  Strategy strategy;
  std::vector<std::size_t> switch_stages;  // 2^(2^k) - 1 below 2^32
};

/// Two-state house X = {x, x*} with r = (0, 1) and F = {delta_x, delta_x*} at
/// both states. At stages 2^(2^k) - 1 the strategy picks x with probability
/// eps/2 and otherwise x*; between switches it stays where it is.
ExampleArtifact make_example_strategy(double epsilon);

}  // namespace pathwise
