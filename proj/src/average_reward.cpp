// Multichain policy iteration for the long-run average criterion.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "pathwise/errors.hpp"
#include "pathwise/tolerances.hpp"
#include "pathwise/value.hpp"

namespace pathwise {
namespace {

Eigen::MatrixXd transition_matrix(const GamblingHouse& house, const std::vector<std::size_t>& choice) {
  const std::size_t n = house.size();
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (std::size_t x = 0; x < n; ++x) {
    const auto& e = house.sparse(x, choice[x]);
    for (std::size_t k = 0; k < e.targets.size(); ++k)
      P(static_cast<long>(x), static_cast<long>(e.targets[k])) += e.probs[k];
  }
  return P;
}

double dot_row(const GamblingHouse& house, std::size_t x, std::size_t a, const std::vector<double>& f) {
  const auto& e = house.sparse(x, a);
  double s = 0.0;
  for (std::size_t k = 0; k < e.targets.size(); ++k) s += e.probs[k] * f[e.targets[k]];
  return s;
}

}  // namespace

ChainEvaluation evaluate_stationary(const GamblingHouse& house, const std::vector<std::size_t>& choice) {
  const std::size_t n = house.size();
  if (choice.size() != n) throw InvalidInput("policy must choose one menu entry per state");
  for (std::size_t x = 0; x < n; ++x)
    if (choice[x] >= house.menu_size(x)) throw InvalidInput("policy chooses an invalid menu index");

  // Reachability closure, then closed communicating classes.
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (std::size_t x = 0; x < n; ++x) {
    std::vector<std::size_t> stack{x};
    reach[x][x] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t y : house.sparse(u, choice[u]).targets)
        if (!reach[x][y]) {
          reach[x][y] = 1;
          stack.push_back(y);
        }
    }
  }
  ChainEvaluation ev;
  std::vector<long> class_of(n, -1);
  for (std::size_t x = 0; x < n; ++x) {
    if (class_of[x] >= 0) continue;
    bool closed = true;
    for (std::size_t y = 0; y < n && closed; ++y)
      if (reach[x][y] && !reach[y][x]) closed = false;
    if (!closed) continue;
    std::vector<std::size_t> cls;
    for (std::size_t y = 0; y < n; ++y)
      if (reach[x][y]) {
        cls.push_back(y);
        class_of[y] = static_cast<long>(ev.recurrent_classes.size());
      }
    ev.recurrent_classes.push_back(std::move(cls));
  }

  const Eigen::MatrixXd P = transition_matrix(house, choice);
  Eigen::VectorXd rho(static_cast<long>(n));
  for (std::size_t x = 0; x < n; ++x) rho(static_cast<long>(x)) = house.expected_payoff(x, choice[x]);

  // Stationary law of each recurrent class.
  std::vector<Eigen::VectorXd> pis;
  for (const auto& cls : ev.recurrent_classes) {
    const long k = static_cast<long>(cls.size());
    Eigen::MatrixXd A(k, k);
    for (long i = 0; i < k; ++i)
      for (long j = 0; j < k; ++j)
        A(j, i) = (i == j ? 1.0 : 0.0) - P(static_cast<long>(cls[i]), static_cast<long>(cls[j]));
    A.row(k - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
    b(k - 1) = 1.0;
    pis.push_back(A.fullPivLu().solve(b));
  }

  // Absorption probabilities from transient states.
  std::vector<std::size_t> transient;
  for (std::size_t x = 0; x < n; ++x)
    if (class_of[x] < 0) transient.push_back(x);
  const long t = static_cast<long>(transient.size());
  const long c = static_cast<long>(ev.recurrent_classes.size());
  Eigen::MatrixXd absorb = Eigen::MatrixXd::Zero(t, c);
  if (t > 0) {
    Eigen::MatrixXd M(t, t);
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(t, c);
    for (long i = 0; i < t; ++i) {
      for (long j = 0; j < t; ++j)
        M(i, j) = (i == j ? 1.0 : 0.0) - P(static_cast<long>(transient[i]), static_cast<long>(transient[j]));
      for (std::size_t y = 0; y < n; ++y)
        if (class_of[y] >= 0) R(i, class_of[y]) += P(static_cast<long>(transient[i]), static_cast<long>(y));
    }
    absorb = M.partialPivLu().solve(R);
  }

  Eigen::MatrixXd Pstar = Eigen::MatrixXd::Zero(static_cast<long>(n), static_cast<long>(n));
  for (long ci = 0; ci < c; ++ci) {
    const auto& cls = ev.recurrent_classes[static_cast<std::size_t>(ci)];
    for (std::size_t x : cls)
      for (std::size_t j = 0; j < cls.size(); ++j)
        Pstar(static_cast<long>(x), static_cast<long>(cls[j])) = pis[static_cast<std::size_t>(ci)](static_cast<long>(j));
    for (long i = 0; i < t; ++i)
      for (std::size_t j = 0; j < cls.size(); ++j)
        Pstar(static_cast<long>(transient[i]), static_cast<long>(cls[j])) +=
            absorb(i, ci) * pis[static_cast<std::size_t>(ci)](static_cast<long>(j));
  }
  const Eigen::VectorXd g = Pstar * rho;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(static_cast<long>(n), static_cast<long>(n));
  const Eigen::VectorXd h = (I - P + Pstar).partialPivLu().solve(rho - g);
  ev.gain.assign(g.data(), g.data() + n);
  ev.bias.assign(h.data(), h.data() + n);
  return ev;
}

AverageRewardSolution solve_average_reward(const GamblingHouse& house, const AverageRewardOptions& options) {
  const std::size_t n = house.size();
  const double tol = tol::kPolicyImprovement;
  AverageRewardSolution sol;

  std::vector<std::size_t> choice(n, 0);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t a = 1; a < house.menu_size(x); ++a)
      if (house.expected_payoff(x, a) > house.expected_payoff(x, choice[x])) choice[x] = a;

  std::set<std::vector<std::size_t>> seen;
  ChainEvaluation ev;
  bool done = false;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    ev = evaluate_stationary(house, choice);
    sol.iterations = it + 1;
    if (!seen.insert(choice).second) break;  // cycling

    std::vector<std::size_t> next = choice;
    bool improved = false;
    for (std::size_t x = 0; x < n; ++x) {
      double best = dot_row(house, x, choice[x], ev.gain);
      for (std::size_t a = 0; a < house.menu_size(x); ++a) {
        const double val = dot_row(house, x, a, ev.gain);
        if (val > best + tol) {
          best = val;
          next[x] = a;
          improved = true;
        }
      }
    }
    if (!improved) {
      for (std::size_t x = 0; x < n; ++x) {
        double gmax = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < house.menu_size(x); ++a) gmax = std::max(gmax, dot_row(house, x, a, ev.gain));
        double best = house.expected_payoff(x, choice[x]) + dot_row(house, x, choice[x], ev.bias);
        for (std::size_t a = 0; a < house.menu_size(x); ++a) {
          if (dot_row(house, x, a, ev.gain) < gmax - tol) continue;
          const double val = house.expected_payoff(x, a) + dot_row(house, x, a, ev.bias);
          if (val > best + tol) {
            best = val;
            next[x] = a;
            improved = true;
          }
        }
      }
    }
    if (!improved) {
      done = true;
      break;
    }
    choice = std::move(next);
  }

  double hmax = 0.0;
  if (done) {
    sol.gain = ev.gain;
    sol.bias = ev.bias;
    sol.choices = choice;
    for (double h : sol.bias) hmax = std::max(hmax, std::abs(h));
  } else {
    // Richardson extrapolation of two small-discount values.
    const double l1 = 1e-3, l2 = 1e-4;
    const DiscountedValues d1 = value_discounted(house, l1);
    const DiscountedValues d2 = value_discounted(house, l2);
    sol.fallback = true;
    sol.gain.resize(n);
    for (std::size_t x = 0; x < n; ++x)
      sol.gain[x] = std::clamp((l1 * d2.values[x] - l2 * d1.values[x]) / (l1 - l2), 0.0, 1.0);
    sol.bias.assign(n, 0.0);
    sol.choices = d2.policy;
  }
  for (double& g : sol.gain) g = std::clamp(g, 0.0, 1.0);
  sol.policy = Strategy::stationary_pure(sol.choices);

  // Residual of the two optimality equations.
  double residual = 0.0;
  for (std::size_t x = 0; x < n; ++x) {
    double gmax = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < house.menu_size(x); ++a) gmax = std::max(gmax, dot_row(house, x, a, sol.gain));
    residual = std::max(residual, std::abs(sol.gain[x] - gmax));
    if (sol.fallback) continue;
    double hbest = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < house.menu_size(x); ++a) {
      if (dot_row(house, x, a, sol.gain) < gmax - tol::kAverageReward) continue;
      hbest = std::max(hbest, house.expected_payoff(x, a) + dot_row(house, x, a, sol.bias));
    }
    residual = std::max(residual, std::abs(sol.gain[x] + sol.bias[x] - hbest));
  }
  sol.optimality_residual = residual;

  if (options.vanishing_discount_check) {
    for (double lambda : options.lambdas) {
      const DiscountedValues dv = value_discounted(house, lambda);
      VanishingDiscountProbe probe;
      probe.lambda = lambda;
      for (std::size_t x = 0; x < n; ++x) probe.max_gap = std::max(probe.max_gap, std::abs(sol.gain[x] - dv.values[x]));
      probe.tolerance = lambda * (2.0 * hmax + 1.0) + 4.0 * lambda * lambda * (1.0 + hmax) * (1.0 + hmax) + 1e-7;
      probe.ok = probe.max_gap <= probe.tolerance;
      sol.probes.push_back(probe);
    }
  }
  return sol;
}

}  // namespace pathwise
