#include "pathwise/invariant.hpp"

#include <algorithm>
#include <cmath>

#include "pathwise/errors.hpp"
#include "pathwise/lp.hpp"
#include "pathwise/simulate.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {

Projection project_invariant(const GamblingHouse& house, const ProbVector& target,
                             const std::vector<bool>& allowed) {
  const std::size_t n = house.size();
  std::vector<std::size_t> offset(n, 0);
  std::size_t nw = 0;
  for (std::size_t x = 0; x < n; ++x) {
    offset[x] = nw;
    if (allowed[x]) nw += house.menu_size(x);
  }
  // Variables: w[x][a] on allowed states, then t[x] for every state.
  lp::Problem prob(nw + n);
  for (std::size_t x = 0; x < n; ++x) prob.objective[nw + x] = 1.0;

  std::vector<lp::Term> mass;
  std::vector<std::vector<lp::Term>> inflow(n);
  for (std::size_t x = 0; x < n; ++x) {
    if (!allowed[x]) continue;
    for (std::size_t a = 0; a < house.menu_size(x); ++a) {
      const std::size_t v = offset[x] + a;
      mass.push_back({v, 1.0});
      const auto& e = house.sparse(x, a);
      for (std::size_t k = 0; k < e.targets.size(); ++k) inflow[e.targets[k]].push_back({v, e.probs[k]});
    }
  }
  prob.add(mass, lp::Relation::equal, 1.0);
  for (std::size_t y = 0; y < n; ++y) {
    // inflow(y) - mu(y) = 0, with mu(y) = 0 off the allowed set.
    std::vector<lp::Term> row = inflow[y];
    if (allowed[y])
      for (std::size_t a = 0; a < house.menu_size(y); ++a) row.push_back({offset[y] + a, -1.0});
    if (!row.empty()) prob.add(std::move(row), lp::Relation::equal, 0.0);
    // t_y >= |mu_y - target_y|.
    std::vector<lp::Term> up{{nw + y, 1.0}}, down{{nw + y, 1.0}};
    if (allowed[y])
      for (std::size_t a = 0; a < house.menu_size(y); ++a) {
        up.push_back({offset[y] + a, -1.0});
        down.push_back({offset[y] + a, 1.0});
      }
    prob.add(std::move(up), lp::Relation::greater_equal, -target[y]);
    prob.add(std::move(down), lp::Relation::greater_equal, target[y]);
  }

  const lp::Solution sol = lp::minimize(prob);
  Projection out;
  if (sol.status == lp::Status::infeasible) return out;
  if (sol.status != lp::Status::optimal)
    throw InternalError(std::string("invariant projection LP ended with status ") + lp::to_string(sol.status));
  out.feasible = true;
  out.l1 = sol.objective;
  out.mu.assign(n, 0.0);
  out.selector.assign(n, {});
  for (std::size_t x = 0; x < n; ++x) {
    out.selector[x].assign(house.menu_size(x), 0.0);
    if (!allowed[x]) {
      out.selector[x][0] = 1.0;
      continue;
    }
    double total = 0.0;
    for (std::size_t a = 0; a < house.menu_size(x); ++a) total += std::max(0.0, sol.x[offset[x] + a]);
    out.mu[x] = total;
    if (total <= tol::kSupport) {
      out.mu[x] = 0.0;
      out.selector[x][0] = 1.0;
      continue;
    }
    for (std::size_t a = 0; a < house.menu_size(x); ++a)
      out.selector[x][a] = std::max(0.0, sol.x[offset[x] + a]) / total;
  }
  return out;
}

InvariantCertificate find_invariant(const GamblingHouse& house, std::size_t x0, double epsilon,
                                    std::size_t N_min, const InvariantOptions& options) {
  if (!(epsilon > 0.0)) throw InvalidInput("epsilon must be positive");
  if (N_min == 0) throw InvalidInput("N_min must be at least 1");
  if (x0 >= house.size()) throw InvalidInput("initial state out of range");
  const std::size_t s = house.size();
  const auto& space = house.space();

  InvariantCertificate cert;
  cert.x0 = x0;
  cert.epsilon = epsilon;
  cert.diameter = space.diameter();
  cert.proxy = value_proxy(house);

  for (std::size_t n = N_min;; n *= 2, ++cert.doublings) {
    if (n > options.max_horizon)
      throw InternalError("find_invariant exceeded horizon cap " + std::to_string(options.max_horizon) +
                          " (last shift gap " + std::to_string(cert.shift_gap) + ", projection gap " +
                          std::to_string(cert.kr_gap) + ", payoff gap " + std::to_string(cert.payoff_gap) +
                          ")");
    const ValueTable table = value_n(house, n, false);
    const OccupationMeasure occ = occupation(house, x0, table.optimal_strategy(), n + 1);
    std::vector<double> zbar(s, 0.0), zshift(s, 0.0);
    std::vector<bool> reached(s, false);
    for (std::size_t m = 1; m <= n + 1; ++m) {
      const ProbVector& z = occ.stages[m - 1];
      for (std::size_t x = 0; x < s; ++x) {
        if (m <= n) {
          zbar[x] += z[x];
          if (z[x] > 0.0) reached[x] = true;
        }
        if (m >= 2) zshift[x] += z[x];
      }
    }
    for (std::size_t x = 0; x < s; ++x) {
      zbar[x] /= static_cast<double>(n);
      zshift[x] /= static_cast<double>(n);
    }
    const ProbVector zb = ProbVector::renormalized(zbar);
    const ProbVector zs = ProbVector::renormalized(zshift);
    cert.source_horizon = n;
    cert.shift_gap = kr_value(space, zb, zs);
    if (cert.shift_gap > epsilon / 2) continue;

    Projection proj = project_invariant(house, zb, reached);
    bool retried = false;
    if (!proj.feasible) {
      proj = project_invariant(house, zb, std::vector<bool>(s, true));
      retried = true;
      if (!proj.feasible) throw InternalError("no invariant law exists on the full state space");
    }
    const ProbVector mu = ProbVector::renormalized(proj.mu);
    cert.kr_gap = kr_value(space, zb, mu);
    cert.tv_gap = proj.l1;
    cert.full_support_retry = retried;
    if (cert.kr_gap > epsilon) continue;
    const double v0 = cert.v_x0();
    cert.payoff_gap = std::abs(mu.dot(house.payoffs()) - v0);
    cert.value_gap = std::abs(mu.dot(cert.proxy.v_N) - v0);
    if (cert.payoff_gap > options.payoff_tolerance || cert.value_gap > options.payoff_tolerance) continue;

    cert.mu_star = mu;
    cert.selector = std::move(proj.selector);
    cert.strategy = Strategy::stationary_behavior(cert.selector);
    const ProbVector image = apply_H(house, cert.mu_star, cert.selector);
    cert.invariance_residual = 0.0;
    for (std::size_t x = 0; x < s; ++x)
      cert.invariance_residual = std::max(cert.invariance_residual, std::abs(image[x] - cert.mu_star[x]));
    return cert;
  }
}

BirkhoffReport birkhoff_check(const GamblingHouse& house, const InvariantCertificate& certificate,
                              std::size_t horizon, std::size_t trials, std::uint64_t seed) {
  if (horizon == 0 || trials == 0) throw InvalidInput("horizon and trials must be positive");
  BirkhoffReport rep;
  rep.horizon = horizon;
  rep.trials = trials;
  rep.mu_payoff = certificate.mu_star.dot(house.payoffs());
  const double slack = 2.0 / static_cast<double>(certificate.proxy.N);
  std::uint64_t trial_base = 0;
  for (std::size_t x : certificate.support()) {
    BirkhoffState st;
    st.state = x;
    st.mu_weight = certificate.mu_star[x];
    st.v_N = certificate.proxy.v_N[x];
    st.min = 1.0;
    st.max = 0.0;
    double sum = 0.0, sq = 0.0;
    for (std::size_t k = 0; k < trials; ++k) {
      const auto tr = simulate(house, x, certificate.strategy, horizon, seed, trial_base + k);
      const double a = tr.running_averages.back();
      sum += a;
      sq += a * a;
      st.min = std::min(st.min, a);
      st.max = std::max(st.max, a);
    }
    trial_base += trials;
    const double tn = static_cast<double>(trials);
    st.mean = sum / tn;
    st.se = trials > 1 ? std::sqrt(std::max(0.0, (sq - tn * st.mean * st.mean) / (tn - 1)) / tn) : 0.0;
    st.flagged = std::abs(st.mean - st.v_N) > 3 * st.se + slack;
    rep.weighted_mean += st.mu_weight * st.mean;
    if (st.flagged) ++rep.flagged;
    rep.states.push_back(st);
  }
  return rep;
}

}  // namespace pathwise
