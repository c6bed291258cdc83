// Shared generators and oracles for the test suites.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/metric.hpp"
#include "pathwise/mdp.hpp"
#include "pathwise/pomdp.hpp"

namespace pathwise::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Shortest-path closure of random symmetric weights: always a metric.
inline FiniteMetricSpace random_space(Rng& rng, std::size_t n) {
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i][j] = d[j][i] = uniform(rng, 0.1, 1.0);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  return FiniteMetricSpace(labels, d);
}

/// Random law with a random support (at least one point).
inline ProbVector random_prob(Rng& rng, std::size_t n, double sparsity = 0.3) {
  std::vector<double> w(n, 0.0);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (uniform(rng) < sparsity) continue;
    w[i] = -std::log(uniform(rng, 1e-12, 1.0));
    s += w[i];
  }
  if (s == 0.0) {
    w[pick(rng, 0, n - 1)] = 1.0;
    s = 1.0;
  }
  for (double& x : w) x /= s;
  return ProbVector::renormalized(w);
}

/// Unconstrained random house on a random metric.
inline GamblingHouse random_house(Rng& rng, std::size_t n, std::size_t max_menu, double sparsity = 0.4) {
  FiniteMetricSpace space = random_space(rng, n);
  std::vector<double> r(n);
  for (double& v : r) v = uniform(rng);
  std::vector<std::vector<ProbVector>> menus(n);
  for (auto& m : menus) {
    const std::size_t k = pick(rng, 1, max_menu);
    for (std::size_t a = 0; a < k; ++a) m.push_back(random_prob(rng, n, sparsity));
  }
  return GamblingHouse(space, r, menus);
}

/// 1-Lipschitz house. Either a scaled discrete metric with arbitrary menus,
/// or a line with menus a -> alpha nu_a + (1 - alpha) delta_{phi_a(x)} for
/// 1-Lipschitz maps phi_a and a Lipschitz payoff.
inline GamblingHouse random_lipschitz_house(Rng& rng, std::size_t n, std::size_t max_menu) {
  if (uniform(rng) < 0.5) {
    FiniteMetricSpace space = FiniteMetricSpace::discrete(n, uniform(rng, 1.0, 2.0));
    std::vector<double> r(n);
    for (double& v : r) v = uniform(rng);
    std::vector<std::vector<ProbVector>> menus(n);
    for (auto& m : menus) {
      const std::size_t k = pick(rng, 1, max_menu);
      for (std::size_t a = 0; a < k; ++a) m.push_back(random_prob(rng, n, 0.4));
    }
    return GamblingHouse(space, r, menus);
  }
  const double step = uniform(rng, 0.2, 0.6);
  std::vector<double> coords(n);
  for (std::size_t i = 0; i < n; ++i) coords[i] = step * static_cast<double>(i);
  FiniteMetricSpace space = FiniteMetricSpace::line(coords);
  std::vector<double> r(n);
  r[0] = uniform(rng);
  for (std::size_t i = 1; i < n; ++i) r[i] = std::clamp(r[i - 1] + uniform(rng, -step, step), 0.0, 1.0);
  const std::size_t k = pick(rng, 1, max_menu);
  std::vector<std::function<std::size_t(std::size_t)>> maps;
  std::vector<double> alpha;
  std::vector<ProbVector> nus;
  for (std::size_t a = 0; a < k; ++a) {
    const std::size_t kind = pick(rng, 0, 3);
    const std::size_t c = pick(rng, 0, n - 1);
    if (kind == 0) maps.push_back([](std::size_t x) { return x; });
    else if (kind == 1) maps.push_back([n](std::size_t x) { return std::min(x + 1, n - 1); });
    else if (kind == 2) maps.push_back([](std::size_t x) { return x == 0 ? 0 : x - 1; });
    else maps.push_back([c](std::size_t) { return c; });
    alpha.push_back(uniform(rng, 0.0, 0.6));
    nus.push_back(random_prob(rng, n, 0.5));
  }
  std::vector<std::vector<ProbVector>> menus(n);
  for (std::size_t x = 0; x < n; ++x)
    for (std::size_t a = 0; a < k; ++a) {
      std::vector<double> w(n);
      for (std::size_t y = 0; y < n; ++y) w[y] = alpha[a] * nus[a][y];
      w[maps[a](x)] += 1.0 - alpha[a];
      menus[x].push_back(ProbVector::renormalized(w));
    }
  return GamblingHouse(space, r, menus);
}

/// X = {x, x*}, discrete metric, r = (0, 1), F(x) = F(x*) = {delta_x, delta_x*}.
inline GamblingHouse two_state_house() {
  FiniteMetricSpace space({"x", "x*"}, {{0.0, 1.0}, {1.0, 0.0}});
  std::vector<ProbVector> menu{ProbVector::dirac(2, 0), ProbVector::dirac(2, 1)};
  return GamblingHouse(space, {0.0, 1.0}, {menu, menu});
}

/// Single absorbing state with payoff c.
inline GamblingHouse absorbing_house(double c) {
  return GamblingHouse(FiniteMetricSpace::discrete(1), {c}, {{ProbVector::dirac(1, 0)}});
}

/// Four states on a line; the corridor 0 -> 3 must be walked to reach the
/// best payoff. Menus: advance (0.8 one step right, 0.2 stay) and stay.
inline GamblingHouse corridor_house() {
  auto space = FiniteMetricSpace::line({0.0, 0.25, 0.5, 0.75});
  std::vector<std::vector<ProbVector>> menus(4);
  for (std::size_t x = 0; x < 4; ++x) {
    std::vector<double> adv(4, 0.0);
    adv[std::min<std::size_t>(x + 1, 3)] += 0.8;
    adv[x] += 0.2;
    menus[x] = {ProbVector(adv), ProbVector::dirac(4, x)};
  }
  return GamblingHouse(space, {0.0, 0.2, 0.45, 0.7}, menus);
}

/// Transportation optimum by enumerating all basic solutions (m + n - 1 cells).
inline double transport_by_vertices(const FiniteMetricSpace& space, const ProbVector& mu,
                                    const ProbVector& nu) {
  const std::size_t m = mu.size(), n = nu.size();
  const std::size_t cells = m * n, basis = m + n - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> mask(cells, 0);
  std::fill(mask.end() - static_cast<long>(basis), mask.end(), 1);
  do {
    std::vector<std::size_t> sel;
    for (std::size_t c = 0; c < cells; ++c)
      if (mask[c]) sel.push_back(c);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<long>(m + n), static_cast<long>(basis));
    Eigen::VectorXd b(static_cast<long>(m + n));
    for (std::size_t i = 0; i < m; ++i) b(static_cast<long>(i)) = mu[i];
    for (std::size_t j = 0; j < n; ++j) b(static_cast<long>(m + j)) = nu[j];
    for (std::size_t k = 0; k < basis; ++k) {
      A(static_cast<long>(sel[k] / n), static_cast<long>(k)) = 1.0;
      A(static_cast<long>(m + sel[k] % n), static_cast<long>(k)) = 1.0;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() < static_cast<long>(basis)) continue;
    Eigen::VectorXd x = lu.solve(b);
    if ((A * x - b).norm() > 1e-10) continue;
    if (x.minCoeff() < -1e-12) continue;
    double cost = 0.0;
    for (std::size_t k = 0; k < basis; ++k) cost += x(static_cast<long>(k)) * space.distance(sel[k] / n, sel[k] % n);
    best = std::min(best, cost);
  } while (std::next_permutation(mask.begin(), mask.end()));
  return best;
}

/// Best expected n-stage average from x0 over all pure strategies, by
/// explicit recursion over the history tree (no state aggregation).
inline double tree_value(const GamblingHouse& h, std::size_t x0, std::size_t n) {
  std::function<double(std::size_t, std::size_t)> best = [&](std::size_t x, std::size_t left) -> double {
    if (left == 0) return 0.0;
    double top = -1.0;
    for (const ProbVector& z : h.menu(x)) {
      double s = 0.0;
      for (std::size_t y = 0; y < h.size(); ++y)
        if (z[y] > 0.0) s += z[y] * (h.payoff(y) + best(y, left - 1));
      top = std::max(top, s);
    }
    return top;
  };
  return best(x0, n) / static_cast<double>(n);
}

/// Literal enumeration of every pure two-stage strategy (root choice plus a
/// choice per first-stage state), scored by enumerating all plays.
inline double enumerated_value_2(const GamblingHouse& h, std::size_t x0) {
  const std::size_t n = h.size();
  double best = -1.0;
  std::vector<std::size_t> second(n, 0);
  for (std::size_t a = 0; a < h.menu_size(x0); ++a) {
    std::fill(second.begin(), second.end(), 0);
    while (true) {
      double total = 0.0;
      for (std::size_t x1 = 0; x1 < n; ++x1)
        for (std::size_t x2 = 0; x2 < n; ++x2) {
          const double p = h.menu(x0)[a][x1] * h.menu(x1)[second[x1]][x2];
          total += p * (h.payoff(x1) + h.payoff(x2));
        }
      best = std::max(best, total / 2.0);
      std::size_t k = 0;
      while (k < n && ++second[k] == h.menu_size(k)) second[k++] = 0;
      if (k == n) break;
    }
  }
  return best;
}

/// Long-run average of a stationary pure policy, from closed classes and
/// absorption probabilities.
inline std::vector<double> stationary_gain(const GamblingHouse& h, const std::vector<std::size_t>& choice) {
  const long n = static_cast<long>(h.size());
  Eigen::MatrixXd P(n, n);
  for (long x = 0; x < n; ++x)
    for (long y = 0; y < n; ++y) P(x, y) = h.menu(static_cast<std::size_t>(x))[choice[static_cast<std::size_t>(x)]][static_cast<std::size_t>(y)];
  std::vector<std::vector<bool>> reach(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (long x = 0; x < n; ++x)
    for (long y = 0; y < n; ++y) reach[x][y] = x == y || P(x, y) > 0.0;
  for (long k = 0; k < n; ++k)
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::vector<double> g(static_cast<std::size_t>(n), 0.0);
  std::vector<bool> recurrent(static_cast<std::size_t>(n), false);
  for (long x = 0; x < n; ++x) {
    bool closed = true;
    for (long y = 0; y < n; ++y)
      if (reach[x][y] && !reach[y][x]) closed = false;
    recurrent[x] = closed;
  }
  std::vector<bool> done(static_cast<std::size_t>(n), false);
  for (long x = 0; x < n; ++x) {
    if (!recurrent[x] || done[x]) continue;
    std::vector<long> cls;
    for (long y = 0; y < n; ++y)
      if (reach[x][y]) cls.push_back(y);
    const long c = static_cast<long>(cls.size());
    Eigen::MatrixXd A(c + 1, c);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(c + 1);
    for (long i = 0; i < c; ++i)
      for (long j = 0; j < c; ++j) A(j, i) = P(cls[i], cls[j]) - (i == j ? 1.0 : 0.0);
    A.row(c).setOnes();
    b(c) = 1.0;
    Eigen::VectorXd pi = A.colPivHouseholderQr().solve(b);
    double val = 0.0;
    for (long i = 0; i < c; ++i) val += pi(i) * h.payoff(static_cast<std::size_t>(cls[i]));
    for (long y : cls) {
      g[y] = val;
      done[y] = true;
    }
  }
  // Transient states: g = P g solved over transients.
  std::vector<long> tr;
  for (long x = 0; x < n; ++x)
    if (!recurrent[x]) tr.push_back(x);
  if (!tr.empty()) {
    const long m = static_cast<long>(tr.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    for (long i = 0; i < m; ++i)
      for (long y = 0; y < n; ++y) {
        if (recurrent[y]) b(i) += P(tr[i], y) * g[y];
        else
          for (long j = 0; j < m; ++j)
            if (tr[j] == y) A(i, j) -= P(tr[i], y);
      }
    Eigen::VectorXd v = A.fullPivLu().solve(b);
    for (long i = 0; i < m; ++i) g[tr[i]] = v(i);
  }
  return g;
}

/// Per-state best gain over every pure stationary policy.
inline std::vector<double> best_stationary_gain(const GamblingHouse& h) {
  const std::size_t n = h.size();
  std::vector<double> best(n, -1.0);
  std::vector<std::size_t> choice(n, 0);
  while (true) {
    const auto g = stationary_gain(h, choice);
    for (std::size_t x = 0; x < n; ++x) best[x] = std::max(best[x], g[x]);
    std::size_t k = 0;
    while (k < n && ++choice[k] == h.menu_size(k)) choice[k++] = 0;
    if (k == n) break;
  }
  return best;
}

/// Unconstrained random MDP.
inline FiniteMDP random_mdp(Rng& rng, std::size_t nk, std::size_t ni) {
  std::vector<std::string> actions;
  for (std::size_t i = 0; i < ni; ++i) actions.push_back("a" + std::to_string(i));
  std::vector<std::vector<double>> g(nk, std::vector<double>(ni));
  std::vector<std::vector<ProbVector>> q(nk);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t i = 0; i < ni; ++i) {
      g[k][i] = uniform(rng);
      q[k].push_back(random_prob(rng, nk, 0.4));
    }
  return FiniteMDP(random_space(rng, nk), actions, g, q);
}

/// 1-Lipschitz MDP: a scaled discrete metric, or a line with transitions
/// alpha nu_i + (1 - alpha) delta_{phi_i(k)} and Lipschitz payoffs.
inline FiniteMDP random_lipschitz_mdp(Rng& rng, std::size_t nk, std::size_t ni) {
  std::vector<std::string> actions;
  for (std::size_t i = 0; i < ni; ++i) actions.push_back("a" + std::to_string(i));
  std::vector<std::vector<double>> g(nk, std::vector<double>(ni));
  std::vector<std::vector<ProbVector>> q(nk);
  if (uniform(rng) < 0.4) {
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t i = 0; i < ni; ++i) {
        g[k][i] = uniform(rng);
        q[k].push_back(random_prob(rng, nk, 0.4));
      }
    return FiniteMDP(FiniteMetricSpace::discrete(nk, uniform(rng, 1.0, 1.5)), actions, g, q);
  }
  const double step = uniform(rng, 0.2, 0.6);
  std::vector<double> coords(nk);
  for (std::size_t k = 0; k < nk; ++k) coords[k] = step * static_cast<double>(k);
  for (std::size_t i = 0; i < ni; ++i) {
    g[0][i] = uniform(rng);
    for (std::size_t k = 1; k < nk; ++k) g[k][i] = std::clamp(g[k - 1][i] + uniform(rng, -step, step), 0.0, 1.0);
  }
  for (std::size_t i = 0; i < ni; ++i) {
    const std::size_t kind = pick(rng, 0, 3), c = pick(rng, 0, nk - 1);
    const double alpha = uniform(rng, 0.0, 0.7);
    const ProbVector nu = random_prob(rng, nk, 0.5);
    for (std::size_t k = 0; k < nk; ++k) {
      std::size_t target = k;
      if (kind == 1) target = std::min(k + 1, nk - 1);
      else if (kind == 2) target = k == 0 ? 0 : k - 1;
      else if (kind == 3) target = c;
      std::vector<double> w(nk);
      for (std::size_t y = 0; y < nk; ++y) w[y] = alpha * nu[y];
      w[target] += 1.0 - alpha;
      q[k].push_back(ProbVector::renormalized(w));
    }
  }
  return FiniteMDP(FiniteMetricSpace::line(coords), actions, g, q);
}

/// Direct n-stage MDP value iteration, averaged.
inline std::vector<std::vector<double>> mdp_values(const FiniteMDP& mdp, std::size_t n) {
  const std::size_t nk = mdp.num_states();
  std::vector<double> V(nk, 0.0), W(nk);
  std::vector<std::vector<double>> out;
  for (std::size_t t = 1; t <= n; ++t) {
    for (std::size_t k = 0; k < nk; ++k) {
      double best = -1.0;
      for (std::size_t i = 0; i < mdp.num_actions(); ++i) {
        double s = mdp.g(k, i);
        for (std::size_t l = 0; l < nk; ++l) s += mdp.q(k, i)[l] * V[l];
        best = std::max(best, s);
      }
      W[k] = best;
    }
    V = W;
    std::vector<double> avg(nk);
    for (std::size_t k = 0; k < nk; ++k) avg[k] = V[k] / static_cast<double>(t);
    out.push_back(avg);
  }
  return out;
}

/// Classic tiger problem with payoffs mapped affinely to [0, 1]: listening
/// 0.9, the right door 1, the wrong door 0. Listening is 85% accurate;
/// opening a door resets the tiger uniformly with an uninformative signal.
inline FinitePOMDP tiger_pomdp() {
  const double acc = 0.85;
  std::vector<std::vector<double>> g{{0.9, 0.0, 1.0}, {0.9, 1.0, 0.0}};
  std::vector<std::vector<ProbVector>> q(2);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> listen(4, 0.0);
    listen[k * 2 + k] = acc;
    listen[k * 2 + (1 - k)] = 1 - acc;
    q[k] = {ProbVector(listen), ProbVector::uniform(4), ProbVector::uniform(4)};
  }
  return FinitePOMDP({"tiger-left", "tiger-right"}, {"listen", "open-left", "open-right"},
                     {"hear-left", "hear-right"}, g, q);
}

/// POMDP whose signal reveals the next state exactly.
inline FinitePOMDP fully_observed(const FiniteMDP& mdp) {
  const std::size_t nk = mdp.num_states();
  std::vector<std::string> states, signals;
  for (std::size_t k = 0; k < nk; ++k) {
    states.push_back(mdp.states().label(k));
    signals.push_back("see-" + mdp.states().label(k));
  }
  std::vector<std::vector<ProbVector>> q(nk);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t i = 0; i < mdp.num_actions(); ++i) {
      std::vector<double> w(nk * nk, 0.0);
      for (std::size_t l = 0; l < nk; ++l) w[l * nk + l] = mdp.q(k, i)[l];
      q[k].push_back(ProbVector(w));
    }
  return FinitePOMDP(states, mdp.actions(), signals, mdp.payoffs(), q);
}

}  // namespace pathwise::testing
