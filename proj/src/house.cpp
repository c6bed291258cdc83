#include "pathwise/house.hpp"

#include <cmath>

#include "pathwise/errors.hpp"
#include "pathwise/lp.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {

GamblingHouse::GamblingHouse(FiniteMetricSpace space, std::vector<double> payoff,
                             std::vector<std::vector<ProbVector>> menus) {
  const std::size_t n = space.size();
  if (payoff.size() != n) throw InvalidInput("payoff vector does not match the state space");
  if (menus.size() != n) throw InvalidInput("one menu per state is required");
  for (std::size_t x = 0; x < n; ++x) {
    if (!(payoff[x] >= 0.0 && payoff[x] <= 1.0))
      throw InvalidInput("payoff of state " + std::to_string(x) + " is outside [0,1]");
    if (menus[x].empty()) throw InvalidInput("state " + std::to_string(x) + " has an empty menu");
    for (std::size_t a = 0; a < menus[x].size(); ++a)
      if (menus[x][a].size() != n)
        throw InvalidInput("menu entry (" + std::to_string(x) + "," + std::to_string(a) +
                           ") is not a distribution over the state space");
  }
  auto impl = std::make_shared<Impl>(Impl{std::move(space), std::move(payoff), std::move(menus), {}, {}, 0});
  impl->sparse.resize(n);
  impl->expected.resize(n);
  for (std::size_t x = 0; x < n; ++x) {
    impl->max_menu = std::max(impl->max_menu, impl->menus[x].size());
    for (const ProbVector& u : impl->menus[x]) {
      SparseEntry e;
      double r = 0.0;
      for (std::size_t y = 0; y < n; ++y) {
        if (u[y] > 0.0) {
          e.targets.push_back(y);
          e.probs.push_back(u[y]);
          r += u[y] * impl->payoff[y];
        }
      }
      impl->sparse[x].push_back(std::move(e));
      impl->expected[x].push_back(r);
    }
  }
  impl_ = std::move(impl);
}

std::optional<std::vector<double>> RelaxedMenu::decompose(const ProbVector& probe) const {
  const std::size_t k = vertices_.size();
  const std::size_t n = probe.size();
  // Variables: lambda (k), e+ (n), e- (n).
  lp::Problem prob(k + 2 * n);
  for (std::size_t y = 0; y < 2 * n; ++y) prob.objective[k + y] = 1.0;
  std::vector<lp::Term> simplex;
  for (std::size_t a = 0; a < k; ++a) {
    if (vertices_[a].size() != n) throw InvalidInput("probe lives on a different space");
    simplex.push_back({a, 1.0});
  }
  prob.add(simplex, lp::Relation::equal, 1.0);
  for (std::size_t y = 0; y < n; ++y) {
    std::vector<lp::Term> row;
    for (std::size_t a = 0; a < k; ++a)
      if (vertices_[a][y] != 0.0) row.push_back({a, vertices_[a][y]});
    row.push_back({k + y, 1.0});
    row.push_back({k + n + y, -1.0});
    prob.add(std::move(row), lp::Relation::equal, probe[y]);
  }
  const lp::Solution sol = lp::minimize(prob);
  if (sol.status != lp::Status::optimal) throw InternalError("membership LP failed");
  if (sol.objective > tol::kMembership) return std::nullopt;
  return std::vector<double>(sol.x.begin(), sol.x.begin() + static_cast<long>(k));
}

RelaxedMenu relaxed_menu_G(const GamblingHouse& house, std::size_t state) {
  if (state >= house.size()) throw InvalidInput("state index out of range");
  const auto menu = house.menu(state);
  return RelaxedMenu(std::vector<ProbVector>(menu.begin(), menu.end()));
}

ProbVector apply_H(const GamblingHouse& house, const ProbVector& z, const SelectorTable& selector) {
  const std::size_t n = house.size();
  if (z.size() != n) throw InvalidInput("distribution does not live on the house state space");
  if (selector.size() != n) throw InvalidInput("selector must have one row per state");
  std::vector<double> mu(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    if (z[x] <= 0.0) continue;
    const auto& row = selector[x];
    if (row.size() != house.menu_size(x))
      throw InvalidInput("selector undefined at state " + std::to_string(x) + " in the support");
    double mass = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) {
      if (row[a] < 0.0) throw InvalidInput("selector weight is negative");
      mass += row[a];
      if (row[a] == 0.0) continue;
      const auto& e = house.sparse(x, a);
      const double w = z[x] * row[a];
      for (std::size_t k = 0; k < e.targets.size(); ++k) mu[e.targets[k]] += w * e.probs[k];
    }
    if (std::abs(mass - 1.0) > tol::kProbabilitySum)
      throw InvalidInput("selector row of state " + std::to_string(x) + " is not a distribution");
  }
  return ProbVector::renormalized(std::move(mu));
}

HMembership h_membership(const GamblingHouse& house, const ProbVector& z, const ProbVector& mu) {
  const std::size_t n = house.size();
  if (z.size() != n || mu.size() != n)
    throw InvalidInput("distributions do not live on the house state space");
  const auto supp = z.support();
  std::vector<std::size_t> offset;
  std::size_t nv = 0;
  for (std::size_t x : supp) {
    offset.push_back(nv);
    nv += house.menu_size(x);
  }
  const std::size_t ep = nv, em = nv + n;
  lp::Problem prob(nv + 2 * n);
  for (std::size_t y = 0; y < 2 * n; ++y) prob.objective[nv + y] = 1.0;
  for (std::size_t s = 0; s < supp.size(); ++s) {
    std::vector<lp::Term> row;
    for (std::size_t a = 0; a < house.menu_size(supp[s]); ++a) row.push_back({offset[s] + a, 1.0});
    prob.add(std::move(row), lp::Relation::equal, z[supp[s]]);
  }
  std::vector<std::vector<lp::Term>> balance(n);
  for (std::size_t s = 0; s < supp.size(); ++s) {
    for (std::size_t a = 0; a < house.menu_size(supp[s]); ++a) {
      const auto& e = house.sparse(supp[s], a);
      for (std::size_t k = 0; k < e.targets.size(); ++k)
        balance[e.targets[k]].push_back({offset[s] + a, e.probs[k]});
    }
  }
  for (std::size_t y = 0; y < n; ++y) {
    balance[y].push_back({ep + y, 1.0});
    balance[y].push_back({em + y, -1.0});
    prob.add(std::move(balance[y]), lp::Relation::equal, mu[y]);
  }
  const lp::Solution sol = lp::minimize(prob);
  if (sol.status != lp::Status::optimal) throw InternalError("H-membership LP failed");

  HMembership out;
  out.residual = sol.objective;
  out.member = sol.objective <= tol::kMembership;
  out.witness.assign(n, {});
  for (std::size_t x = 0; x < n; ++x) {
    out.witness[x].assign(house.menu_size(x), 0.0);
    out.witness[x][0] = 1.0;
  }
  for (std::size_t s = 0; s < supp.size(); ++s) {
    const std::size_t x = supp[s];
    double total = 0.0;
    for (std::size_t a = 0; a < house.menu_size(x); ++a) total += sol.x[offset[s] + a];
    if (total <= 0.0) continue;
    for (std::size_t a = 0; a < house.menu_size(x); ++a)
      out.witness[x][a] = sol.x[offset[s] + a] / total;
  }
  return out;
}

}  // namespace pathwise
