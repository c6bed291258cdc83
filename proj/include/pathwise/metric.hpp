#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pathwise {

using Matrix = std::vector<std::vector<double>>;

/// Outcome of validating a candidate distance matrix.
struct SpaceVerdict {
  enum class Kind {
    ok,
    empty,
    non_square,
    label_mismatch,
    non_finite,
    negative,
    nonzero_diagonal,
    asymmetric,
    triangle,
  };

  Kind kind = Kind::ok;
  // Offending indices; for triangle violations (i, j, k) with
  // d(i,k) > d(i,j) + d(j,k).
  std::array<std::size_t, 3> where{0, 0, 0};
  double excess = 0.0;

  bool ok() const { return kind == Kind::ok; }
  std::string message() const;
};

SpaceVerdict validate_space(const std::vector<std::string>& labels, const Matrix& dist);

/// A finite set of labelled points with a metric. Either a validated dense
/// matrix or a generated metric (products of metrics, belief spaces) for
/// which the caller guarantees the axioms.
class FiniteMetricSpace {
 public:
  using DistanceFn = std::function<double(std::size_t, std::size_t)>;

  FiniteMetricSpace(std::vector<std::string> labels, Matrix dist);

  /// Points on the real line at the given coordinates.
  static FiniteMetricSpace line(const std::vector<double>& coords);
  /// Uniform metric: d(i,j) = scale for i != j.
  static FiniteMetricSpace discrete(std::size_t n, double scale = 1.0);
  /// Lazily evaluated metric; nothing is validated.
  static FiniteMetricSpace generated(std::vector<std::string> labels, DistanceFn fn,
                                     double diameter);

  std::size_t size() const { return impl_->labels.size(); }
  const std::vector<std::string>& labels() const { return impl_->labels; }
  const std::string& label(std::size_t i) const { return impl_->labels[i]; }
  double distance(std::size_t i, std::size_t j) const {
    return impl_->fn ? impl_->fn(i, j) : impl_->dist[i * size() + j];
  }
  double diameter() const { return impl_->diameter; }
  bool is_dense() const { return !impl_->fn; }
  /// Dense copy of the matrix (materializes generated metrics).
  Matrix matrix() const;
  std::optional<std::size_t> index_of(const std::string& label) const;

 private:
  struct Impl {
    std::vector<std::string> labels;
    std::vector<double> dist;
    DistanceFn fn;
    double diameter = 0.0;
  };
  explicit FiniteMetricSpace(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

  std::shared_ptr<const Impl> impl_;
};

/// Nonnegative weights summing to one over the points of a space.
class ProbVector {
 public:
  ProbVector() = default;
  /// Validates: entries >= 0 and |sum - 1| <= 1e-12.
  explicit ProbVector(std::vector<double> weights);

  static ProbVector dirac(std::size_t n, std::size_t i);
  static ProbVector uniform(std::size_t n);
  /// For computed vectors: clamps round-off negatives and divides by the sum.
  /// Rejects sums further than 1e-9 from one.
  static ProbVector renormalized(std::vector<double> weights);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }
  const std::vector<double>& vector() const { return weights_; }
  std::vector<std::size_t> support(double threshold = 0.0) const;
  double dot(std::span<const double> f) const;

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> weights_;
};

/// Joint law with prescribed marginals, stored densely source x target.
struct Coupling {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> mass;  // row-major
  ProbVector source_marginal;
  ProbVector target_marginal;

  double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }
  /// Row/column sums equal the marginals within tol.
  bool is_valid(double tol) const;
};

struct LipschitzPotential {
  std::vector<double> values;
};

struct KrResult {
  double distance = 0.0;
  Coupling coupling;
};

struct KrDualResult {
  double distance = 0.0;
  LipschitzPotential potential;
};

/// Primal Kantorovich-Rubinstein distance by the transportation simplex.
KrResult kr_distance(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu);

/// Distance only; avoids materializing the coupling.
double kr_value(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu);

/// Dual form: max over 1-Lipschitz f of <f, mu - nu>, solved as a general LP.
KrDualResult kr_dual(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu);

struct WeightedVector {
  double weight;
  ProbVector vector;
};

ProbVector barycenter(std::span<const WeightedVector> mixture);

struct SelectorChoice {
  std::size_t index = 0;  // position in the menu
  double distance = 0.0;
  Coupling coupling;
};

/// Menu element closest to u in KR distance (lowest index on ties) with an
/// optimal coupling from u to it.
SelectorChoice coupling_selector_psi(const FiniteMetricSpace& space, const ProbVector& u,
                                     std::span<const ProbVector> menu);

namespace transport {

struct Flow {
  std::size_t source;
  std::size_t target;
  double amount;
};

struct Plan {
  double cost = 0.0;
  std::vector<Flow> flows;  // basic cells, possibly with zero amount
};

/// Balanced transportation problem. supply and demand are strictly positive
/// and sum to the same total. cost(i, j) indexes the dense problem.
Plan solve(std::span<const double> supply, std::span<const double> demand,
           const std::function<double(std::size_t, std::size_t)>& cost);

}  // namespace transport

}  // namespace pathwise
