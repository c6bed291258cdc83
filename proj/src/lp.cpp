#include "pathwise/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pathwise::lp {
namespace {

constexpr double kPivotTol = 1e-10;
constexpr double kCostTol = 1e-10;
constexpr int kDegenerateStreakForBland = 50;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_((rows + 1) * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }
  double& objective() { return at(rows_, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    basis_[pr] = pc;
  }

  // Runs simplex iterations over the current cost row. Columns with
  // allowed[c] == false never enter.
  Status run(const std::vector<bool>& allowed, const std::vector<bool>& active_row) {
    int degenerate_streak = 0;
    const std::size_t limit = 200 * (rows_ + cols_) + 1000;
    for (std::size_t iter = 0; iter < limit; ++iter) {
      const bool bland = degenerate_streak >= kDegenerateStreakForBland;
      std::size_t enter = cols_;
      double best = -kCostTol;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (!allowed[c]) continue;
        const double d = cost(c);
        if (d < best) {
          enter = c;
          best = d;
          if (bland) break;
        }
      }
      if (enter == cols_) return Status::optimal;

      std::size_t leave = rows_;
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        if (!active_row[r]) continue;
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double q = std::max(rhs(r), 0.0) / a;
        if (q < ratio - 1e-14 ||
            (std::abs(q - ratio) <= 1e-14 && leave < rows_ && basis_[r] < basis_[leave])) {
          ratio = q;
          leave = r;
        }
      }
      if (leave == rows_) return Status::unbounded;
      degenerate_streak = ratio <= 1e-14 ? degenerate_streak + 1 : 0;
      pivot(leave, enter);
    }
    return Status::iteration_limit;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
  std::vector<std::size_t> basis_;
};

}  // namespace

const char* to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

Solution minimize(const Problem& problem) {
  const std::size_t n = problem.num_vars();
  const std::size_t m = problem.constraints.size();

  // Normalize to nonnegative right-hand sides.
  std::vector<Relation> rel(m);
  std::vector<double> sign(m, 1.0);
  std::size_t num_slack = 0;
  std::size_t num_art = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& con = problem.constraints[i];
    rel[i] = con.relation;
    if (con.rhs < 0.0) {
      sign[i] = -1.0;
      if (rel[i] == Relation::less_equal) rel[i] = Relation::greater_equal;
      else if (rel[i] == Relation::greater_equal) rel[i] = Relation::less_equal;
    }
    if (rel[i] != Relation::equal) ++num_slack;
    if (rel[i] != Relation::less_equal) ++num_art;
  }

  const std::size_t art_begin = n + num_slack;
  const std::size_t cols = art_begin + num_art;
  Tableau t(m, cols);
  std::vector<bool> is_art(cols, false);
  std::size_t next_slack = n;
  std::size_t next_art = art_begin;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& con = problem.constraints[i];
    for (const auto& term : con.terms) t.at(i, term.var) += sign[i] * term.coeff;
    t.rhs(i) = sign[i] * con.rhs;
    if (rel[i] == Relation::less_equal) {
      t.at(i, next_slack) = 1.0;
      t.basis()[i] = next_slack++;
    } else {
      if (rel[i] == Relation::greater_equal) t.at(i, next_slack++) = -1.0;
      t.at(i, next_art) = 1.0;
      is_art[next_art] = true;
      t.basis()[i] = next_art++;
    }
  }

  std::vector<bool> active(m, true);
  Solution sol;

  // Phase 1: minimize the sum of artificials.
  if (num_art > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[t.basis()[i]]) continue;
      for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) -= t.at(i, c);
      t.at(m, t.basis()[i]) = 0.0;
    }
    std::vector<bool> allowed(cols, true);
    const Status s = t.run(allowed, active);
    if (s == Status::iteration_limit) {
      sol.status = s;
      return sol;
    }
    double scale = 1.0;
    for (std::size_t i = 0; i < m; ++i) scale = std::max(scale, std::abs(problem.constraints[i].rhs));
    if (-t.objective() > 1e-9 * scale) {
      sol.status = Status::infeasible;
      return sol;
    }
    // Drive remaining artificials out of the basis.
    for (std::size_t i = 0; i < m; ++i) {
      if (!is_art[t.basis()[i]]) continue;
      std::size_t col = cols;
      double best = kPivotTol;
      for (std::size_t c = 0; c < art_begin; ++c) {
        if (std::abs(t.at(i, c)) > best) {
          best = std::abs(t.at(i, c));
          col = c;
        }
      }
      if (col == cols) active[i] = false;  // redundant row
      else t.pivot(i, col);
    }
  }

  // Phase 2.
  for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) = 0.0;
  for (std::size_t c = 0; c < n; ++c) t.cost(c) = problem.objective[c];
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    const std::size_t b = t.basis()[i];
    const double cb = t.at(m, b);
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) -= cb * t.at(i, c);
    t.at(m, b) = 0.0;
  }
  std::vector<bool> allowed(cols, true);
  for (std::size_t c = art_begin; c < cols; ++c) allowed[c] = false;
  const Status s = t.run(allowed, active);
  sol.status = s;
  if (s != Status::optimal) return sol;

  sol.x.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (!active[i]) continue;
    const std::size_t b = t.basis()[i];
    if (b < n) sol.x[b] = std::max(t.rhs(i), 0.0);
  }
  sol.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) sol.objective += problem.objective[c] * sol.x[c];
  return sol;
}

}  // namespace pathwise::lp
