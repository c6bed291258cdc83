#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "pathwise/metric.hpp"

namespace pathwise {

/// A gambling house (X, F, r) with finite menus F(x).
class GamblingHouse {
 public:
  /// Support-compressed menu entry, used by the solvers and simulators.
  struct SparseEntry {
    std::vector<std::size_t> targets;
    std::vector<double> probs;
  };

  GamblingHouse(FiniteMetricSpace space, std::vector<double> payoff,
                std::vector<std::vector<ProbVector>> menus);

  const FiniteMetricSpace& space() const { return impl_->space; }
  std::size_t size() const { return impl_->payoff.size(); }
  double payoff(std::size_t x) const { return impl_->payoff[x]; }
  const std::vector<double>& payoffs() const { return impl_->payoff; }
  std::span<const ProbVector> menu(std::size_t x) const { return impl_->menus.at(x); }
  std::size_t menu_size(std::size_t x) const { return impl_->menus[x].size(); }
  const std::vector<std::vector<ProbVector>>& menus() const { return impl_->menus; }
  const SparseEntry& sparse(std::size_t x, std::size_t a) const { return impl_->sparse[x][a]; }
  /// <r, F(x)[a]>.
  double expected_payoff(std::size_t x, std::size_t a) const { return impl_->expected[x][a]; }
  std::size_t max_menu_size() const { return impl_->max_menu; }

 private:
  struct Impl {
    FiniteMetricSpace space;
    std::vector<double> payoff;
    std::vector<std::vector<ProbVector>> menus;
    std::vector<std::vector<SparseEntry>> sparse;
    std::vector<std::vector<double>> expected;
    std::size_t max_menu = 0;
  };
  std::shared_ptr<const Impl> impl_;
};

/// Per-state distribution over menu indices. An empty row means "undefined".
using SelectorTable = std::vector<std::vector<double>>;

/// sco F(x) for a finite menu: the polytope spanned by the menu vertices.
class RelaxedMenu {
 public:
  RelaxedMenu(std::vector<ProbVector> vertices) : vertices_(std::move(vertices)) {}

  std::span<const ProbVector> vertices() const { return vertices_; }
  /// Convex weights reproducing probe within tol::kMembership in l1, if any.
  std::optional<std::vector<double>> decompose(const ProbVector& probe) const;
  bool contains(const ProbVector& probe) const { return decompose(probe).has_value(); }

 private:
  std::vector<ProbVector> vertices_;
};

RelaxedMenu relaxed_menu_G(const GamblingHouse& house, std::size_t state);

/// One step of the measure dynamics: mu[y] = sum_x z[x] sum_a s[x][a] F(x)[a][y].
ProbVector apply_H(const GamblingHouse& house, const ProbVector& z, const SelectorTable& selector);

struct HMembership {
  bool member = false;
  double residual = 0.0;     // l1 distance from mu to the reachable set
  SelectorTable witness;     // defined on supp z; first menu entry elsewhere
};

/// Decides mu in H(z) by LP over state x menu occupation variables.
HMembership h_membership(const GamblingHouse& house, const ProbVector& z, const ProbVector& mu);

}  // namespace pathwise
