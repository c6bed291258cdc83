#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace pathwise::lp {

enum class Relation { less_equal, equal, greater_equal };

struct Term {
  std::size_t var;
  double coeff;
};

struct Constraint {
  std::vector<Term> terms;
  Relation relation;
  double rhs;
};

/// minimize objective . x  subject to constraints, x >= 0.
struct Problem {
  explicit Problem(std::size_t num_vars) : objective(num_vars, 0.0) {}

  std::size_t num_vars() const { return objective.size(); }
  void add(std::vector<Term> terms, Relation relation, double rhs) {
    constraints.push_back({std::move(terms), relation, rhs});
  }

  std::vector<double> objective;
  std::vector<Constraint> constraints;
};

enum class Status { optimal, infeasible, unbounded, iteration_limit };

struct Solution {
  Status status = Status::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense two-phase primal simplex. Dantzig pricing with a switch to
/// Bland's rule after a run of degenerate pivots.
Solution minimize(const Problem& problem);

const char* to_string(Status status);

}  // namespace pathwise::lp
