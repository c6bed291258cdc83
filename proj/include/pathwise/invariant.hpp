#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/strategy.hpp"
#include "pathwise/value.hpp"

namespace pathwise {

/// An H-invariant law mu* near the average occupation of an n-stage optimal
/// strategy from x0, with a stationary selector sigma* keeping it fixed.
struct InvariantCertificate {
  std::size_t x0 = 0;
  double epsilon = 0.0;
  ProbVector mu_star;
  SelectorTable selector;           // sigma*, one row per state
  Strategy strategy = Strategy::stationary_pure({});
  std::size_t source_horizon = 0;   // n
  std::size_t doublings = 0;
  double shift_gap = 0.0;           // d_KR(zbar_n, zbar'_n)
  double kr_gap = 0.0;              // d_KR(zbar_n, mu*)
  double tv_gap = 0.0;              // l1 distance minimized by the projection
  double invariance_residual = 0.0; // max |apply_H(mu*, sigma*) - mu*|
  bool full_support_retry = false;  // reached support admitted no invariant law
  double payoff_gap = 0.0;          // |<r, mu*> - v(x0)|
  double value_gap = 0.0;           // |<v_N, mu*> - v(x0)|
  double diameter = 0.0;
  ValueProxy proxy;                 // v(x0) := proxy.v_N[x0]

  double v_x0() const { return proxy.v_N[x0]; }
  std::vector<std::size_t> support() const { return mu_star.support(); }
};

struct InvariantOptions {
  std::size_t max_horizon = std::size_t{1} << 20;
  /// Bound on payoff_gap and value_gap for acceptance.
  double payoff_tolerance = 5e-4;
};

/// Doubles n from N_min until d_KR(zbar_n, zbar'_n) <= eps/2, the
/// projection lands within eps of zbar_n and both payoff gaps are below
/// options.payoff_tolerance. Throws InternalError past the cap.
InvariantCertificate find_invariant(const GamblingHouse& house, std::size_t x0, double epsilon,
                                    std::size_t N_min, const InvariantOptions& options = {});

/// Invariant law closest in l1 to target among laws supported on `allowed`.
/// Empty result when no invariant law lives there.
struct Projection {
  bool feasible = false;
  std::vector<double> mu;
  SelectorTable selector;
  double l1 = 0.0;
};
Projection project_invariant(const GamblingHouse& house, const ProbVector& target,
                             const std::vector<bool>& allowed);

struct BirkhoffState {
  std::size_t state = 0;
  double mu_weight = 0.0;
  double mean = 0.0;
  double se = 0.0;
  double min = 0.0;
  double max = 0.0;
  double v_N = 0.0;
  bool flagged = false;
};

struct BirkhoffReport {
  std::size_t horizon = 0;
  std::size_t trials = 0;
  std::vector<BirkhoffState> states;
  double weighted_mean = 0.0;  // sum_x mu*(x) mean(x)
  double mu_payoff = 0.0;      // <r, mu*>
  std::size_t flagged = 0;
};

/// Terminal running averages of sigma* from each support point of mu*.
/// A state is flagged when its mean misses v_N(x) by more than 3 SE + 2/N.
BirkhoffReport birkhoff_check(const GamblingHouse& house, const InvariantCertificate& certificate,
                              std::size_t horizon, std::size_t trials, std::uint64_t seed);

}  // namespace pathwise
