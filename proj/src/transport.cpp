// Transportation simplex (MODI / stepping-stone) on the spanning-tree basis.

#include <algorithm>
#include <cmath>
#include <limits>

#include "pathwise/errors.hpp"
#include "pathwise/metric.hpp"

namespace pathwise::transport {
namespace {

struct Cell {
  std::size_t row;
  std::size_t col;
  double flow;
};

class Solver {
 public:
  Solver(std::span<const double> supply, std::span<const double> demand,
         const std::function<double(std::size_t, std::size_t)>& cost)
      : m_(supply.size()), n_(demand.size()), cost_(m_ * n_), in_basis_(m_ * n_, -1) {
    for (std::size_t i = 0; i < m_; ++i)
      for (std::size_t j = 0; j < n_; ++j) cost_[i * n_ + j] = cost(i, j);
    north_west(supply, demand);
  }

  Plan run() {
    const std::size_t limit = 50 * (m_ * n_ + m_ + n_) + 1000;
    int degenerate_streak = 0;
    double cmax = 0.0;
    for (double c : cost_) cmax = std::max(cmax, std::abs(c));
    const double tol = 1e-12 * std::max(1.0, cmax);

    for (std::size_t iter = 0; iter < limit; ++iter) {
      compute_duals();
      const bool bland = degenerate_streak > 20;
      std::size_t er = m_, ec = n_;
      double best = -tol;
      for (std::size_t i = 0; i < m_ && !(bland && er < m_); ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
          if (in_basis_[i * n_ + j] >= 0) continue;
          const double rc = cost_[i * n_ + j] - u_[i] - v_[j];
          if (rc < best) {
            best = rc;
            er = i;
            ec = j;
            if (bland) break;
          }
        }
      }
      if (er == m_) return plan();
      degenerate_streak = pivot(er, ec) ? 0 : degenerate_streak + 1;
    }
    throw InternalError("transportation simplex: iteration limit reached");
  }

 private:
  void north_west(std::span<const double> supply, std::span<const double> demand) {
    std::vector<double> a(supply.begin(), supply.end());
    std::vector<double> b(demand.begin(), demand.end());
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(a[i], b[j]);
      const bool row_done = a[i] <= b[j];
      add_cell(i, j, x);
      a[i] -= x;
      b[j] -= x;
      if (i + 1 == m_ && j + 1 == n_) break;
      if (i + 1 == m_) ++j;
      else if (j + 1 == n_) ++i;
      else if (row_done) ++i;
      else ++j;
    }
  }

  void add_cell(std::size_t i, std::size_t j, double x) {
    in_basis_[i * n_ + j] = static_cast<long>(cells_.size());
    cells_.push_back({i, j, x});
  }

  // Tree nodes: rows 0..m-1, columns m..m+n-1.
  void build_adjacency() {
    adj_.assign(m_ + n_, {});
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      adj_[cells_[k].row].push_back(k);
      adj_[m_ + cells_[k].col].push_back(k);
    }
  }

  std::size_t other_end(std::size_t cell, std::size_t node) const {
    const Cell& c = cells_[cell];
    return node < m_ ? m_ + c.col : c.row;
  }

  void compute_duals() {
    build_adjacency();
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adj_[node]) {
        const std::size_t next = other_end(k, node);
        if (seen[next]) continue;
        seen[next] = true;
        const Cell& c = cells_[k];
        const double ck = cost_[c.row * n_ + c.col];
        if (next < m_) u_[next] = ck - v_[c.col];
        else v_[next - m_] = ck - u_[c.row];
        stack.push_back(next);
      }
    }
  }

  // Returns true when the pivot moved positive mass.
  bool pivot(std::size_t er, std::size_t ec) {
    // Path in the tree from column node ec to row node er.
    const std::size_t start = m_ + ec;
    const std::size_t goal = er;
    std::vector<long> via(m_ + n_, -1);
    std::vector<bool> seen(m_ + n_, false);
    std::vector<std::size_t> stack{start};
    seen[start] = true;
    while (!stack.empty() && !seen[goal]) {
      const std::size_t node = stack.back();
      stack.pop_back();
      for (std::size_t k : adj_[node]) {
        const std::size_t next = other_end(k, node);
        if (seen[next]) continue;
        seen[next] = true;
        via[next] = static_cast<long>(k);
        stack.push_back(next);
      }
    }
    if (!seen[goal]) throw InternalError("transportation simplex: basis is not a spanning tree");

    std::vector<std::size_t> path;  // cells from goal back to start
    for (std::size_t node = goal; node != start;) {
      const auto k = static_cast<std::size_t>(via[node]);
      path.push_back(k);
      node = other_end(k, node);
    }
    std::reverse(path.begin(), path.end());  // start (column ec) -> goal (row er)

    // Along the path from the entering column, signs alternate starting with '-'.
    double theta = std::numeric_limits<double>::infinity();
    std::size_t leave = path.front();
    for (std::size_t p = 0; p < path.size(); p += 2) {
      const double f = cells_[path[p]].flow;
      if (f < theta) {
        theta = f;
        leave = path[p];
      }
    }
    for (std::size_t p = 0; p < path.size(); ++p) {
      Cell& c = cells_[path[p]];
      c.flow += (p % 2 == 0) ? -theta : theta;
      if (c.flow < 0.0) c.flow = 0.0;
    }
    cells_[leave].flow = 0.0;

    // Replace the leaving cell by the entering one.
    in_basis_[cells_[leave].row * n_ + cells_[leave].col] = -1;
    cells_[leave] = {er, ec, theta};
    in_basis_[er * n_ + ec] = static_cast<long>(leave);
    return theta > 0.0;
  }

  Plan plan() const {
    Plan p;
    for (const Cell& c : cells_) {
      p.flows.push_back({c.row, c.col, c.flow});
      p.cost += c.flow * cost_[c.row * n_ + c.col];
    }
    return p;
  }

  std::size_t m_, n_;
  std::vector<double> cost_;
  std::vector<long> in_basis_;
  std::vector<Cell> cells_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace

Plan solve(std::span<const double> supply, std::span<const double> demand,
           const std::function<double(std::size_t, std::size_t)>& cost) {
  if (supply.empty() || demand.empty())
    throw InvalidInput("transportation problem with an empty side");
  Solver solver(supply, demand, cost);
  return solver.run();
}

}  // namespace pathwise::transport
