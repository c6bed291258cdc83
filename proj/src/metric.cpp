#include "pathwise/metric.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pathwise/errors.hpp"
#include "pathwise/lp.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {

std::string SpaceVerdict::message() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::ok: return "valid metric space";
    case Kind::empty: return "space has no points";
    case Kind::non_square: os << "distance matrix is not square (row " << where[0] << ")"; break;
    case Kind::label_mismatch: os << "label count does not match matrix dimension"; break;
    case Kind::non_finite: os << "non-finite distance at (" << where[0] << ',' << where[1] << ')'; break;
    case Kind::negative: os << "negative distance at (" << where[0] << ',' << where[1] << ')'; break;
    case Kind::nonzero_diagonal: os << "nonzero diagonal entry at " << where[0]; break;
    case Kind::asymmetric: os << "asymmetric distance at (" << where[0] << ',' << where[1] << ')'; break;
    case Kind::triangle:
      os << "triangle inequality violated at (" << where[0] << ',' << where[1] << ',' << where[2]
         << ") by " << excess;
      break;
  }
  return os.str();
}

SpaceVerdict validate_space(const std::vector<std::string>& labels, const Matrix& dist) {
  using K = SpaceVerdict::Kind;
  SpaceVerdict v;
  const std::size_t n = dist.size();
  if (n == 0) return {K::empty};
  for (std::size_t i = 0; i < n; ++i)
    if (dist[i].size() != n) return {K::non_square, {i, 0, 0}};
  if (labels.size() != n) return {K::label_mismatch};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = dist[i][j];
      if (!std::isfinite(d)) return {K::non_finite, {i, j, 0}};
      if (d < 0.0) return {K::negative, {i, j, 0}};
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (dist[i][i] != 0.0) return {K::nonzero_diagonal, {i, i, 0}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (dist[i][j] != dist[j][i]) return {K::asymmetric, {i, j, 0}};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        const double excess = dist[i][k] - dist[i][j] - dist[j][k];
        if (excess > 1e-12) {
          v.kind = K::triangle;
          v.where = {i, j, k};
          v.excess = excess;
          return v;
        }
      }
  return v;
}

FiniteMetricSpace::FiniteMetricSpace(std::vector<std::string> labels, Matrix dist) {
  const SpaceVerdict verdict = validate_space(labels, dist);
  if (!verdict.ok()) throw InvalidInput("invalid metric space: " + verdict.message());
  auto impl = std::make_shared<Impl>();
  const std::size_t n = dist.size();
  impl->labels = std::move(labels);
  impl->dist.resize(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      impl->dist[i * n + j] = dist[i][j];
      impl->diameter = std::max(impl->diameter, dist[i][j]);
    }
  impl_ = std::move(impl);
}

FiniteMetricSpace FiniteMetricSpace::line(const std::vector<double>& coords) {
  const std::size_t n = coords.size();
  std::vector<std::string> labels(n);
  Matrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = std::to_string(i);
    for (std::size_t j = 0; j < n; ++j) d[i][j] = std::abs(coords[i] - coords[j]);
  }
  return FiniteMetricSpace(std::move(labels), std::move(d));
}

FiniteMetricSpace FiniteMetricSpace::discrete(std::size_t n, double scale) {
  std::vector<std::string> labels(n);
  Matrix d(n, std::vector<double>(n, scale));
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = std::to_string(i);
    d[i][i] = 0.0;
  }
  return FiniteMetricSpace(std::move(labels), std::move(d));
}

FiniteMetricSpace FiniteMetricSpace::generated(std::vector<std::string> labels, DistanceFn fn,
                                               double diameter) {
  auto impl = std::make_shared<Impl>();
  impl->labels = std::move(labels);
  impl->fn = std::move(fn);
  impl->diameter = diameter;
  return FiniteMetricSpace(std::move(impl));
}

Matrix FiniteMetricSpace::matrix() const {
  const std::size_t n = size();
  Matrix d(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i][j] = distance(i, j);
  return d;
}

std::optional<std::size_t> FiniteMetricSpace::index_of(const std::string& label) const {
  const auto& l = labels();
  auto it = std::find(l.begin(), l.end(), label);
  if (it == l.end()) return std::nullopt;
  return static_cast<std::size_t>(it - l.begin());
}

ProbVector::ProbVector(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidInput("probability vector is empty");
  double sum = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const double w = weights_[i];
    if (!std::isfinite(w) || w < 0.0)
      throw InvalidInput("probability vector has a negative or non-finite weight at index " +
                         std::to_string(i));
    sum += w;
  }
  if (std::abs(sum - 1.0) > tol::kProbabilitySum) {
    std::ostringstream os;
    os.precision(17);
    os << "probability vector weights sum to " << sum;
    throw InvalidInput(os.str());
  }
}

ProbVector ProbVector::dirac(std::size_t n, std::size_t i) {
  std::vector<double> w(n, 0.0);
  w.at(i) = 1.0;
  return ProbVector(std::move(w));
}

ProbVector ProbVector::uniform(std::size_t n) {
  std::vector<double> w(n, 1.0 / static_cast<double>(n));
  return renormalized(std::move(w));
}

ProbVector ProbVector::renormalized(std::vector<double> weights) {
  double sum = 0.0;
  for (double& w : weights) {
    if (w < 0.0 && w > -1e-12) w = 0.0;
    sum += w;
  }
  if (!(std::abs(sum - 1.0) <= 1e-9))
    throw InvalidInput("computed distribution has total mass " + std::to_string(sum));
  for (double& w : weights) w /= sum;
  ProbVector p;
  p.weights_ = std::move(weights);
  for (double w : p.weights_)
    if (!(w >= 0.0)) throw InvalidInput("computed distribution has a negative weight");
  return p;
}

std::vector<std::size_t> ProbVector::support(double threshold) const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (weights_[i] > threshold) s.push_back(i);
  return s;
}

double ProbVector::dot(std::span<const double> f) const {
  double s = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) s += weights_[i] * f[i];
  return s;
}

bool Coupling::is_valid(double tol) const {
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (mass[i * cols + j] < 0.0) return false;
      s += mass[i * cols + j];
    }
    if (std::abs(s - source_marginal[i]) > tol) return false;
  }
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += mass[i * cols + j];
    if (std::abs(s - target_marginal[j]) > tol) return false;
  }
  return true;
}

namespace {

void check_pair(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu) {
  if (mu.size() != space.size() || nu.size() != space.size())
    throw InvalidInput("probability vectors do not live on the given space");
}

struct RestrictedPlan {
  std::vector<std::size_t> src;
  std::vector<std::size_t> dst;
  transport::Plan plan;
};

RestrictedPlan solve_restricted(const FiniteMetricSpace& space, const ProbVector& mu,
                                const ProbVector& nu) {
  RestrictedPlan r;
  r.src = mu.support();
  r.dst = nu.support();
  std::vector<double> a, b;
  for (std::size_t i : r.src) a.push_back(mu[i]);
  for (std::size_t j : r.dst) b.push_back(nu[j]);
  r.plan = transport::solve(a, b, [&](std::size_t i, std::size_t j) {
    return space.distance(r.src[i], r.dst[j]);
  });
  return r;
}

}  // namespace

KrResult kr_distance(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu) {
  check_pair(space, mu, nu);
  const RestrictedPlan r = solve_restricted(space, mu, nu);
  KrResult out;
  const std::size_t n = space.size();
  out.coupling.rows = n;
  out.coupling.cols = n;
  out.coupling.mass.assign(n * n, 0.0);
  out.coupling.source_marginal = mu;
  out.coupling.target_marginal = nu;
  for (const auto& f : r.plan.flows)
    out.coupling.mass[r.src[f.source] * n + r.dst[f.target]] += f.amount;
  out.distance = std::max(0.0, r.plan.cost);
  return out;
}

double kr_value(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu) {
  check_pair(space, mu, nu);
  return std::max(0.0, solve_restricted(space, mu, nu).plan.cost);
}

KrDualResult kr_dual(const FiniteMetricSpace& space, const ProbVector& mu, const ProbVector& nu) {
  check_pair(space, mu, nu);
  const std::size_t n = space.size();
  std::vector<std::size_t> pts;
  for (std::size_t i = 0; i < n; ++i)
    if (mu[i] > 0.0 || nu[i] > 0.0) pts.push_back(i);
  const std::size_t k = pts.size();

  // Potentials are shift invariant, so g >= 0 loses nothing.
  lp::Problem prob(k);
  for (std::size_t a = 0; a < k; ++a) prob.objective[a] = -(mu[pts[a]] - nu[pts[a]]);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      if (a != b)
        prob.add({{a, 1.0}, {b, -1.0}}, lp::Relation::less_equal, space.distance(pts[a], pts[b]));
  const lp::Solution sol = lp::minimize(prob);
  if (sol.status != lp::Status::optimal)
    throw InternalError(std::string("KR dual LP failed: ") + lp::to_string(sol.status));

  // McShane extension off the support union.
  std::vector<double> f(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < k; ++a) best = std::min(best, sol.x[a] + space.distance(x, pts[a]));
    f[x] = best;
  }
  for (std::size_t a = 0; a < k; ++a) f[pts[a]] = sol.x[a];
  const double lo = *std::min_element(f.begin(), f.end());
  for (double& v : f) v -= lo;

  KrDualResult out;
  double gap = 0.0;
  for (std::size_t x = 0; x < n; ++x) gap += f[x] * (mu[x] - nu[x]);
  out.distance = std::max(0.0, gap);
  out.potential.values = std::move(f);
  return out;
}

ProbVector barycenter(std::span<const WeightedVector> mixture) {
  if (mixture.empty()) throw InvalidInput("barycenter of an empty mixture");
  const std::size_t n = mixture.front().vector.size();
  double total = 0.0;
  for (const auto& wv : mixture) {
    if (wv.weight < 0.0) throw InvalidInput("barycenter weight is negative");
    if (wv.vector.size() != n) throw InvalidInput("barycenter mixes vectors of different spaces");
    total += wv.weight;
  }
  if (std::abs(total - 1.0) > tol::kProbabilitySum)
    throw InvalidInput("barycenter weights sum to " + std::to_string(total));
  std::vector<double> out(n, 0.0);
  for (const auto& wv : mixture)
    for (std::size_t i = 0; i < n; ++i) out[i] += wv.weight * wv.vector[i];
  return ProbVector::renormalized(std::move(out));
}

SelectorChoice coupling_selector_psi(const FiniteMetricSpace& space, const ProbVector& u,
                                     std::span<const ProbVector> menu) {
  if (menu.empty()) throw InvalidInput("coupling selector called with an empty menu");
  SelectorChoice best;
  bool have = false;
  for (std::size_t a = 0; a < menu.size(); ++a) {
    const double d = kr_value(space, u, menu[a]);
    if (!have || d < best.distance) {
      best.index = a;
      best.distance = d;
      have = true;
      if (d == 0.0) break;
    }
  }
  KrResult kr = kr_distance(space, u, menu[best.index]);
  best.coupling = std::move(kr.coupling);
  best.distance = kr.distance;
  return best;
}

}  // namespace pathwise
