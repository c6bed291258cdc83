#include "pathwise/value.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pathwise/errors.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {
namespace {

// One backward-induction step in sum form. Returns nothing; fills next and
// the argmax row.
void bellman_step(const GamblingHouse& house, const std::vector<double>& prev, std::vector<double>& next,
                  std::uint32_t* argmax_row) {
  const std::size_t n = house.size();
  for (std::size_t x = 0; x < n; ++x) {
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t a = 0; a < house.menu_size(x); ++a) {
      const auto& e = house.sparse(x, a);
      double s = house.expected_payoff(x, a);
      for (std::size_t k = 0; k < e.targets.size(); ++k) s += e.probs[k] * prev[e.targets[k]];
      if (s > best) {
        best = s;
        arg = static_cast<std::uint32_t>(a);
      }
    }
    next[x] = best;
    if (argmax_row) argmax_row[x] = arg;
  }
}

}  // namespace

Strategy ValueTable::optimal_strategy() const {
  auto table = argmax_flat;
  const std::size_t n = horizon;
  const std::size_t s = states;
  return Strategy::markov_rule(
      Randomization::pure,
      [table, n, s](std::size_t stage, std::size_t x) {
        if (stage == 0 || x >= s) throw StrategyUndefined("n-stage strategy queried outside its domain");
        const std::size_t remaining = stage <= n ? n - stage + 1 : 1;
        return Decision::pure((*table)[(remaining - 1) * s + x]);
      },
      std::to_string(n) + "-stage optimal pure markov");
}

ValueTable value_n(const GamblingHouse& house, std::size_t n, bool keep_all_horizons) {
  if (n == 0) throw InvalidInput("horizon must be at least 1");
  const std::size_t s = house.size();
  ValueTable table;
  table.horizon = n;
  table.states = s;
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(n * s, 0);
  std::vector<double> prev(s, 0.0), next(s, 0.0);
  if (keep_all_horizons) table.by_horizon.reserve(n);
  for (std::size_t t = 1; t <= n; ++t) {
    bellman_step(house, prev, next, argmax->data() + (t - 1) * s);
    std::swap(prev, next);
    if (keep_all_horizons) {
      std::vector<double> v(s);
      for (std::size_t x = 0; x < s; ++x) v[x] = prev[x] / static_cast<double>(t);
      table.by_horizon.push_back(std::move(v));
    }
  }
  table.values.resize(s);
  for (std::size_t x = 0; x < s; ++x) table.values[x] = prev[x] / static_cast<double>(n);
  table.argmax_flat = std::move(argmax);
  return table;
}

std::size_t ValueProxy::stabilization_horizon(double epsilon) const {
  std::size_t n0 = excess.size() + 1;
  for (std::size_t m = excess.size(); m >= 1; --m) {
    if (excess[m - 1] > epsilon) break;
    n0 = m;
  }
  return std::max<std::size_t>(1, std::min(n0, excess.size()));
}

ValueProxy value_proxy(const GamblingHouse& house, double gap_target, std::size_t max_N) {
  const std::size_t s = house.size();
  ValueProxy proxy;
  std::vector<double> prev(s, 0.0), next(s, 0.0), v_half(s, 0.0);
  std::size_t N = 1;
  for (std::size_t t = 1;; ++t) {
    bellman_step(house, prev, next, nullptr);
    std::swap(prev, next);
    if (t == N) {
      for (std::size_t x = 0; x < s; ++x) v_half[x] = prev[x] / static_cast<double>(t);
    } else if (t == 2 * N) {
      double gap = 0.0;
      for (std::size_t x = 0; x < s; ++x)
        gap = std::max(gap, std::abs(prev[x] / static_cast<double>(t) - v_half[x]));
      proxy.N = N;
      proxy.gap = gap;
      proxy.v_N = v_half;
      if (gap < gap_target) {
        proxy.converged = true;
        break;
      }
      if (2 * N > max_N) break;
      N *= 2;
      for (std::size_t x = 0; x < s; ++x) v_half[x] = prev[x] / static_cast<double>(t);
    }
  }
  // Second sweep: sup excess of v_m over v_N for m <= 2N.
  std::fill(prev.begin(), prev.end(), 0.0);
  proxy.excess.assign(2 * proxy.N, 0.0);
  for (std::size_t t = 1; t <= 2 * proxy.N; ++t) {
    bellman_step(house, prev, next, nullptr);
    std::swap(prev, next);
    double e = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < s; ++x) e = std::max(e, prev[x] / static_cast<double>(t) - proxy.v_N[x]);
    proxy.excess[t - 1] = e;
  }
  return proxy;
}

DiscountedValues value_discounted(const GamblingHouse& house, double lambda,
                                  std::size_t max_iterations) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidInput("discount weight lambda must lie in (0, 1]");
  const std::size_t s = house.size();
  DiscountedValues out;
  out.lambda = lambda;
  std::vector<double> v(s, 0.0), w(s, 0.0);
  std::vector<std::size_t> policy(s, 0);
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    double change = 0.0;
    for (std::size_t x = 0; x < s; ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < house.menu_size(x); ++a) {
        const auto& e = house.sparse(x, a);
        double cont = 0.0;
        for (std::size_t k = 0; k < e.targets.size(); ++k) cont += e.probs[k] * v[e.targets[k]];
        const double val = lambda * house.expected_payoff(x, a) + (1.0 - lambda) * cont;
        if (val > best) {
          best = val;
          policy[x] = a;
        }
      }
      w[x] = best;
      change = std::max(change, std::abs(w[x] - v[x]));
    }
    std::swap(v, w);
    out.iterations = it;
    if (change < tol::kDiscountedStop) {
      out.converged = true;
      break;
    }
  }
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
  out.values = std::move(v);
  out.policy = std::move(policy);
  return out;
}

OccupationMeasure occupation(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                             std::size_t n) {
  if (!strategy.is_markov())
    throw InvalidInput("exact occupation measures need a Markov or stationary strategy; "
                       "estimate history-dependent strategies by simulation");
  if (x0 >= house.size()) throw InvalidInput("initial state out of range");
  if (n == 0) throw InvalidInput("horizon must be at least 1");
  const std::size_t s = house.size();
  OccupationMeasure occ;
  occ.stages.reserve(n);
  std::vector<double> z(s, 0.0), next(s, 0.0), total(s, 0.0);
  z[x0] = 1.0;
  for (std::size_t m = 1; m <= n; ++m) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < s; ++x) {
      if (z[x] == 0.0) continue;
      const Decision d = strategy.decide_markov(m, x);
      auto push = [&](std::size_t a, double w) {
        if (a >= house.menu_size(x)) throw StrategyUndefined("invalid menu index in occupation");
        const auto& e = house.sparse(x, a);
        for (std::size_t k = 0; k < e.targets.size(); ++k) next[e.targets[k]] += w * e.probs[k];
      };
      if (d.is_pure()) {
        push(d.index, z[x]);
      } else {
        for (std::size_t a = 0; a < d.weights.size(); ++a)
          if (d.weights[a] > 0.0) push(a, z[x] * d.weights[a]);
      }
    }
    std::swap(z, next);
    for (std::size_t x = 0; x < s; ++x) total[x] += z[x];
    occ.stages.push_back(ProbVector::renormalized(z));
  }
  for (double& t : total) t /= static_cast<double>(n);
  occ.average = ProbVector::renormalized(std::move(total));
  return occ;
}

std::string LipschitzVerdict::message() const {
  std::ostringstream os;
  if (ok()) return "house is 1-Lipschitz";
  if (!correspondence_ok)
    os << "menu entry " << a << " of state " << x << " has no partner in F(" << y
       << ") within distance " << distance << " (best KR cost " << best_cost << ")";
  if (!payoff_ok) {
    if (!correspondence_ok) os << "; ";
    os << "payoff is not 1-Lipschitz between states " << payoff_x << " and " << payoff_y;
  }
  return os.str();
}

LipschitzVerdict check_lipschitz(const GamblingHouse& house) {
  LipschitzVerdict v;
  const std::size_t n = house.size();
  const auto& space = house.space();
  for (std::size_t x = 0; x < n && v.correspondence_ok; ++x) {
    for (std::size_t a = 0; a < house.menu_size(x) && v.correspondence_ok; ++a) {
      const ProbVector& u = house.menu(x)[a];
      for (std::size_t y = 0; y < n; ++y) {
        if (y == x) continue;
        const double d = space.distance(x, y);
        double best = std::numeric_limits<double>::infinity();
        for (const ProbVector& w : house.menu(y)) {
          best = std::min(best, kr_value(space, u, w));
          if (best <= d + tol::kLipschitz) break;
        }
        if (best > d + tol::kLipschitz) {
          v.correspondence_ok = false;
          v.x = x;
          v.a = a;
          v.y = y;
          v.best_cost = best;
          v.distance = d;
          break;
        }
      }
    }
  }
  for (std::size_t x = 0; x < n && v.payoff_ok; ++x)
    for (std::size_t y = x + 1; y < n; ++y)
      if (std::abs(house.payoff(x) - house.payoff(y)) > space.distance(x, y) + tol::kLipschitz) {
        v.payoff_ok = false;
        v.payoff_x = x;
        v.payoff_y = y;
        break;
      }
  return v;
}

ValueLipschitzVerdict check_value_lipschitz(const GamblingHouse& house, std::size_t n_max,
                                            const std::vector<double>* gain) {
  ValueLipschitzVerdict out;
  const std::size_t s = house.size();
  const auto& space = house.space();
  const ValueTable table = value_n(house, n_max, true);
  out.worst_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t <= n_max; ++t) {
    const auto& v = table.by_horizon[t - 1];
    for (std::size_t x = 0; x < s; ++x)
      for (std::size_t y = x + 1; y < s; ++y) {
        const double slack = std::abs(v[x] - v[y]) - space.distance(x, y);
        if (slack > out.worst_slack) {
          out.worst_slack = slack;
          out.worst_n = t;
          out.worst_x = x;
          out.worst_y = y;
        }
        if (slack > tol::kLipschitz) ++out.violations;
      }
  }
  if (s == 1) out.worst_slack = 0.0;
  out.ok = out.violations == 0;
  if (gain) {
    out.gain_worst_slack = s == 1 ? 0.0 : -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < s; ++x)
      for (std::size_t y = x + 1; y < s; ++y) {
        const double slack = std::abs((*gain)[x] - (*gain)[y]) - space.distance(x, y);
        out.gain_worst_slack = std::max(out.gain_worst_slack, slack);
        if (slack > tol::kLipschitz) {
          out.gain_ok = false;
          ++out.violations;
        }
      }
    out.ok = out.ok && out.gain_ok;
  }
  return out;
}

}  // namespace pathwise
