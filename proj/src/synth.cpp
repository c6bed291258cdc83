#include "pathwise/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

#include "pathwise/errors.hpp"
#include "pathwise/simulate.hpp"

namespace pathwise {
namespace {

void validate_modulus(const Modulus& eta) {
  if (std::abs(eta(0.0)) > 1e-15) throw InvalidInput("modulus must vanish at 0");
  double prev = 0.0;
  for (int k = 1; k <= 64; ++k) {
    const double v = eta(k / 32.0);
    if (v < prev) throw InvalidInput("modulus must be non-decreasing");
    prev = v;
  }
}

}  // namespace

GammaEstimate estimate_gamma_inf(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                                 std::size_t T, std::size_t trials, std::uint64_t seed,
                                 const GammaOptions& options) {
  if (T == 0 || trials == 0) throw InvalidInput("horizon and trials must be positive");
  if (!(options.window_start_fraction >= 0.0 && options.window_start_fraction <= 1.0))
    throw InvalidInput("window start fraction must lie in [0, 1]");
  GammaEstimate est;
  est.horizon = T;
  est.trials = trials;
  est.window_start = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(options.window_start_fraction * static_cast<double>(T))));
  est.minima.assign(trials, 0.0);
  std::vector<double> finals(trials, 0.0);

  auto run = [&](std::size_t k) {
    const CounterRng rng(seed, k);
    double total = 0.0, low = std::numeric_limits<double>::infinity();
    run_path(house, x0, strategy, T, rng, [&](std::size_t m, std::size_t, std::size_t x) {
      total += house.payoff(x);
      if (m >= est.window_start) low = std::min(low, total / static_cast<double>(m));
    });
    est.minima[k] = low;
    finals[k] = total / static_cast<double>(T);
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, trials));
  if (threads == 1) {
    for (std::size_t k = 0; k < trials; ++k) run(k);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t k = w; k < trials; k += threads) run(k);
      });
    for (auto& t : pool) t.join();
  }

  auto moments = [trials](const std::vector<double>& v, double& mean, double& se) {
    double s = 0.0;
    for (double a : v) s += a;
    mean = s / static_cast<double>(trials);
    double q = 0.0;
    for (double a : v) q += (a - mean) * (a - mean);
    se = trials > 1 ? std::sqrt(q / static_cast<double>(trials - 1) / static_cast<double>(trials)) : 0.0;
  };
  moments(est.minima, est.mean, est.se);
  moments(finals, est.final_mean, est.final_se);
  est.ci_low = est.mean - 1.96 * est.se;
  est.ci_high = est.mean + 1.96 * est.se;
  return est;
}

Strategy junction_strategy(const GamblingHouse& house, std::size_t y_state, std::size_t target_state,
                           const AverageRewardSolution* solution) {
  if (y_state >= house.size() || target_state >= house.size())
    throw InvalidInput("junction endpoints out of range");
  if (solution) return solution->policy;
  return solve_average_reward(house).policy;
}

bool SynthesisReport::structure_ok() const {
  if (n2 != static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n1))) + 1) return false;
  if (n3 < 1 || n3 > n2) return false;
  for (std::size_t b : set_B)
    if (!std::binary_search(set_A.begin(), set_A.end(), b)) return false;
  return z_n3_outside_A <= epsilon;
}

bool SynthesisReport::pre_switch_ok() const {
  return pre_switch_value >= v_estimate - 3 * epsilon - 2.0 / static_cast<double>(certificate.proxy.N);
}

bool SynthesisReport::end_to_end_ok() const {
  return gamma && gamma->mean >= v_estimate - 5 * epsilon - 2 * eta_3eps - 3 * gamma->se;
}

bool SynthesisReport::gain_oracle_ok() const {
  return gamma && gamma->mean >= average_reward.gain[x0] - epsilon - 3 * gamma->se;
}

SynthesisReport synthesize(const GamblingHouse& house, std::size_t x0, const SynthesisParams& params) {
  const double eps = params.epsilon;
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  if (x0 >= house.size()) throw InvalidInput("initial state out of range");
  SynthesisReport rep;
  rep.x0 = x0;
  rep.epsilon = eps;
  rep.lipschitz = check_lipschitz(house).ok();
  Modulus eta = [](double t) { return t; };
  if (params.modulus) {
    validate_modulus(*params.modulus);
    eta = *params.modulus;
  } else if (!rep.lipschitz) {
    throw InvalidInput("house is not 1-Lipschitz; supply a modulus of continuity");
  }
  rep.eta_3eps = eta(3 * eps);

  // (1) Certificate from N = 2 n0.
  const ValueProxy proxy = value_proxy(house);
  rep.n0 = proxy.stabilization_horizon(eps);
  rep.epsilon_prime = params.epsilon_prime.value_or(eps * eps * eps);
  rep.certificate = find_invariant(house, x0, rep.epsilon_prime, 2 * rep.n0, params.invariant);
  rep.v_estimate = rep.certificate.v_x0();
  rep.n1 = rep.certificate.source_horizon;
  rep.n2 = static_cast<std::size_t>(std::floor(eps * static_cast<double>(rep.n1))) + 1;

  // Sets B and A, with nearest-point cells.
  const auto& space = house.space();
  const std::size_t s = house.size();
  rep.set_B = rep.certificate.support();
  rep.cell.assign(s, std::nullopt);
  for (std::size_t x = 0; x < s; ++x) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t b : rep.set_B)
      if (space.distance(x, b) < best) {
        best = space.distance(x, b);
        arg = b;
      }
    if (best <= eps) {
      rep.set_A.push_back(x);
      rep.cell[x] = arg;
    }
  }

  // (2) Switching stage.
  const Strategy sigma0 = value_n(house, rep.n1, false).optimal_strategy();
  const OccupationMeasure occ = occupation(house, x0, sigma0, rep.n2);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 1; m <= rep.n2; ++m) {
    double out = 0.0;
    for (std::size_t x = 0; x < s; ++x)
      if (!rep.cell[x]) out += occ.stages[m - 1][x];
    if (out < best) {
      best = out;
      rep.n3 = m;
    }
  }
  rep.z_n3_outside_A = best;
  rep.z_n3 = occ.stages[rep.n3 - 1].vector();
  rep.pre_switch_value = occ.stages[rep.n3 - 1].dot(rep.certificate.proxy.v_N);

  // (3) Continuations: junction strategies on A, the gain-optimal policy off A.
  rep.average_reward = solve_average_reward(house);
  std::vector<std::optional<Strategy>> successor(s);
  for (std::size_t x = 0; x < s; ++x)
    successor[x] = rep.cell[x] ? junction_strategy(house, x, *rep.cell[x], &rep.average_reward)
                               : rep.average_reward.policy;
  rep.strategy = Strategy::switching(sigma0, rep.n3, std::move(successor));
  rep.predicted_gamma_inf = occ.stages[rep.n3 - 1].dot(rep.average_reward.gain);

  // (4) Monte Carlo estimate.
  if (params.simulate)
    rep.gamma = estimate_gamma_inf(house, x0, rep.strategy, params.horizon, params.trials, params.seed,
                                   params.gamma);
  return rep;
}

ExampleArtifact make_example_strategy(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidInput("epsilon must lie in (0, 1)");
  FiniteMetricSpace space({"x", "x*"}, {{0.0, 1.0}, {1.0, 0.0}});
  std::vector<ProbVector> menu{ProbVector::dirac(2, 0), ProbVector::dirac(2, 1)};
  GamblingHouse house(space, {0.0, 1.0}, {menu, menu});

  std::vector<std::size_t> stages;
  for (unsigned k = 0; k < 6; ++k) stages.push_back((std::size_t{1} << (1u << k)) - 1);
  auto weights = std::make_shared<const std::vector<double>>(std::vector<double>{epsilon / 2, 1 - epsilon / 2});
  auto switches = std::make_shared<const std::vector<std::size_t>>(stages);
  Strategy strategy = Strategy::markov_rule(
      Randomization::behavior,
      [weights, switches](std::size_t stage, std::size_t state) {
        if (std::binary_search(switches->begin(), switches->end(), stage)) return Decision::behavior(*weights);
        return Decision::pure(state);
      },
      "switch blocks at stages 2^(2^k)-1, x with probability " + std::to_string(epsilon / 2));
  return {std::move(house), std::move(strategy), std::move(stages)};
}

}  // namespace pathwise
