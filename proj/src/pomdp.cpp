#include "pathwise/pomdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>
#include <tuple>

#include "pathwise/errors.hpp"
#include "pathwise/simulate.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {

FinitePOMDP::FinitePOMDP(std::vector<std::string> states, std::vector<std::string> actions,
                         std::vector<std::string> signals, std::vector<std::vector<double>> g,
                         std::vector<std::vector<ProbVector>> q)
    : states_(std::move(states)),
      actions_(std::move(actions)),
      signals_(std::move(signals)),
      g_(std::move(g)),
      q_(std::move(q)) {
  const std::size_t nk = states_.size(), ni = actions_.size(), ns = signals_.size();
  if (nk == 0 || ni == 0 || ns == 0) throw InvalidInput("POMDP needs states, actions and signals");
  if (g_.size() != nk || q_.size() != nk) throw InvalidInput("g and q need one row per state");
  for (std::size_t k = 0; k < nk; ++k) {
    if (g_[k].size() != ni || q_[k].size() != ni)
      throw InvalidInput("g and q rows of state " + std::to_string(k) + " need one entry per action");
    for (std::size_t i = 0; i < ni; ++i) {
      if (!(g_[k][i] >= 0.0 && g_[k][i] <= 1.0))
        throw InvalidInput("g(" + std::to_string(k) + "," + std::to_string(i) + ") is outside [0, 1]");
      if (q_[k][i].size() != nk * ns)
        throw InvalidInput("q(" + std::to_string(k) + "," + std::to_string(i) + ") is not a law on K x S");
    }
  }
}

double expected_payoff(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i) {
  double s = 0.0;
  for (std::size_t k = 0; k < pomdp.num_states(); ++k) s += p[k] * pomdp.g(k, i);
  return s;
}

std::vector<double> signal_probabilities(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i) {
  const std::size_t nk = pomdp.num_states(), ns = pomdp.num_signals();
  if (p.size() != nk) throw InvalidInput("belief does not live on K");
  if (i >= pomdp.num_actions()) throw InvalidInput("action out of range");
  std::vector<double> out(ns, 0.0);
  for (std::size_t k = 0; k < nk; ++k) {
    if (p[k] == 0.0) continue;
    for (std::size_t kp = 0; kp < nk; ++kp)
      for (std::size_t s = 0; s < ns; ++s) out[s] += p[k] * pomdp.q(k, i, kp, s);
  }
  return out;
}

BeliefUpdate belief_update(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i, std::size_t s) {
  const std::size_t nk = pomdp.num_states();
  if (p.size() != nk) throw InvalidInput("belief does not live on K");
  if (i >= pomdp.num_actions() || s >= pomdp.num_signals()) throw InvalidInput("action or signal out of range");
  std::vector<double> post(nk, 0.0);
  double z = 0.0;
  for (std::size_t k = 0; k < nk; ++k) {
    if (p[k] == 0.0) continue;
    for (std::size_t kp = 0; kp < nk; ++kp) {
      const double w = p[k] * pomdp.q(k, i, kp, s);
      post[kp] += w;
      z += w;
    }
  }
  if (z <= tol::kNullSignal)
    throw ImpossibleObservation("signal " + pomdp.signals()[s] + " has probability zero after action " +
                                pomdp.actions()[i]);
  for (double& w : post) w /= z;
  return {ProbVector::renormalized(std::move(post)), z};
}

BeliefGrid::BeliefGrid(std::size_t dimension, std::size_t resolution)
    : dimension_(dimension), resolution_(resolution) {
  if (dimension == 0) throw InvalidInput("belief grid needs at least one state");
  if (resolution == 0) throw InvalidInput("grid resolution must be positive");
  std::vector<std::size_t> c(dimension, 0);
  // Lexicographic enumeration of compositions of D into `dimension` parts.
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == dimension) {
      c[pos] = left;
      index_.emplace(c, counts_.size());
      counts_.push_back(c);
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      c[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, resolution);
}

ProbVector BeliefGrid::node(std::size_t j) const {
  std::vector<double> w(dimension_);
  for (std::size_t k = 0; k < dimension_; ++k)
    w[k] = static_cast<double>(counts_[j][k]) / static_cast<double>(resolution_);
  return ProbVector::renormalized(std::move(w));
}

std::optional<std::size_t> BeliefGrid::find(const std::vector<std::size_t>& counts) const {
  const auto it = index_.find(counts);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t BeliefGrid::project(const ProbVector& p) const {
  if (p.size() != dimension_) throw InvalidInput("belief dimension does not match the grid");
  const double D = static_cast<double>(resolution_);
  std::vector<std::size_t> c(dimension_);
  std::vector<std::pair<long long, std::size_t>> order;  // (quantized remainder, index)
  std::size_t used = 0;
  for (std::size_t k = 0; k < dimension_; ++k) {
    const double x = p[k] * D;
    const double f = std::floor(x + 1e-12);
    c[k] = static_cast<std::size_t>(f);
    used += c[k];
    order.emplace_back(std::llround(std::max(0.0, x - f) * 1e12), k);
  }
  if (used > resolution_) throw InternalError("belief projection overshot the resolution");
  // Largest remainders first; among equal remainders round up the later
  // coordinates, which keeps the count vector lexicographically smallest.
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second > b.second;
  });
  for (std::size_t r = 0; r < resolution_ - used; ++r) ++c[order[r % dimension_].second];
  return index_.at(c);
}

double BeliefGrid::l1(std::size_t a, std::size_t b) const {
  std::size_t s = 0;
  for (std::size_t k = 0; k < dimension_; ++k)
    s += counts_[a][k] > counts_[b][k] ? counts_[a][k] - counts_[b][k] : counts_[b][k] - counts_[a][k];
  return static_cast<double>(s) / static_cast<double>(resolution_);
}

BeliefHouse pomdp_to_house(const FinitePOMDP& pomdp, const BeliefGrid& grid) {
  if (grid.dimension() != pomdp.num_states()) throw InvalidInput("grid dimension does not match |K|");
  const std::size_t ni = pomdp.num_actions(), ns = pomdp.num_signals(), nodes = grid.size();

  // Per (node, action): payoff coordinate and signal-indexed successor nodes.
  std::vector<double> next_a(nodes * ni);
  std::vector<std::size_t> next_node(nodes * ni * ns, BeliefHouse::npos);
  std::vector<double> next_prob(nodes * ni * ns, 0.0);
  for (std::size_t j = 0; j < nodes; ++j) {
    const ProbVector p = grid.node(j);
    for (std::size_t i = 0; i < ni; ++i) {
      next_a[j * ni + i] = expected_payoff(pomdp, p, i);
      const auto probs = signal_probabilities(pomdp, p, i);
      for (std::size_t s = 0; s < ns; ++s) {
        if (probs[s] <= tol::kNullSignal) continue;
        next_node[(j * ni + i) * ns + s] = grid.project(belief_update(pomdp, p, i, s).posterior);
        next_prob[(j * ni + i) * ns + s] = probs[s];
      }
    }
  }

  std::map<std::tuple<double, std::size_t, std::size_t>, std::size_t> key;
  std::vector<BeliefHouseState> states;
  std::deque<std::size_t> queue;
  auto intern = [&](double a, std::size_t i, std::size_t node) {
    const auto [it, fresh] = key.emplace(std::tuple{a, i, node}, states.size());
    if (fresh) {
      states.push_back({a, i, node});
      queue.push_back(it->second);
    }
    return it->second;
  };
  std::vector<std::size_t> node_state(nodes);
  for (std::size_t j = 0; j < nodes; ++j) node_state[j] = intern(0.0, 0, j);
  std::vector<std::vector<std::pair<std::size_t, double>>> entries;  // per (state, action), sparse
  std::vector<std::size_t> successor(nodes * ni * ns, BeliefHouse::npos);
  std::vector<bool> node_done(nodes, false);
  while (!queue.empty()) {
    const std::size_t x = queue.front();
    queue.pop_front();
    const std::size_t j = states[x].node;
    if (node_done[j]) continue;
    node_done[j] = true;
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t t = next_node[(j * ni + i) * ns + s];
        if (t != BeliefHouse::npos) successor[(j * ni + i) * ns + s] = intern(next_a[j * ni + i], i, t);
      }
  }

  const std::size_t n = states.size();
  std::vector<std::string> labels(n);
  std::vector<double> payoff(n);
  std::vector<std::vector<ProbVector>> menus(n);
  for (std::size_t x = 0; x < n; ++x) {
    const auto& st = states[x];
    std::ostringstream os;
    os.precision(17);
    os << "(" << st.a << "," << pomdp.actions()[st.action] << ",[";
    for (std::size_t k = 0; k < grid.dimension(); ++k) os << (k ? " " : "") << grid.counts(st.node)[k];
    os << "]/" << grid.resolution() << ")";
    labels[x] = os.str();
    payoff[x] = st.a;
    for (std::size_t i = 0; i < ni; ++i) {
      std::vector<double> w(n, 0.0);
      for (std::size_t s = 0; s < ns; ++s) {
        const std::size_t t = successor[(st.node * ni + i) * ns + s];
        if (t != BeliefHouse::npos) w[t] += next_prob[(st.node * ni + i) * ns + s];
      }
      menus[x].push_back(ProbVector::renormalized(std::move(w)));
    }
  }

  double amin = 0.0, amax = 0.0;
  for (const auto& st : states) {
    amin = std::min(amin, st.a);
    amax = std::max(amax, st.a);
  }
  const double diameter = std::max({amax - amin, ni > 1 ? 1.0 : 0.0, grid.dimension() > 1 ? 2.0 : 0.0});
  auto shared_states = std::make_shared<const std::vector<BeliefHouseState>>(states);
  auto metric = [shared_states, grid](std::size_t a, std::size_t b) {
    const auto& sa = (*shared_states)[a];
    const auto& sb = (*shared_states)[b];
    return std::max({std::abs(sa.a - sb.a), sa.action == sb.action ? 0.0 : 1.0, grid.l1(sa.node, sb.node)});
  };
  GamblingHouse house(FiniteMetricSpace::generated(std::move(labels), metric, diameter), std::move(payoff),
                      std::move(menus));
  return BeliefHouse{std::move(house), grid, std::move(states), std::move(node_state), ni, ns,
                     std::move(successor)};
}

HouseController::HouseController(const BeliefHouse& belief_house, Strategy strategy,
                                 std::optional<std::size_t> initial_state)
    : bh_(&belief_house), strategy_(std::move(strategy)), initial_(initial_state) {}

void HouseController::start(const FinitePOMDP& pomdp, const ProbVector& p1) {
  pomdp_ = &pomdp;
  history_.assign(1, initial_ ? *initial_ : bh_->embed(p1));
  exact_ = p1;
  re_anchors_ = 0;
}

Decision HouseController::decide(std::size_t) { return strategy_.decide(history_); }

void HouseController::observe(std::size_t action, std::size_t signal) {
  exact_ = belief_update(*pomdp_, *exact_, action, signal).posterior;
  std::size_t next = bh_->successor(history_.back(), action, signal);
  if (next == BeliefHouse::npos) {
    next = bh_->embed(*exact_);
    ++re_anchors_;
  }
  history_.push_back(next);
}

PomdpTrajectory pomdp_simulate(const FinitePOMDP& pomdp, const ProbVector& p1, PomdpController& controller,
                               std::size_t horizon, std::uint64_t seed, std::uint64_t trial) {
  const std::size_t nk = pomdp.num_states(), ns = pomdp.num_signals();
  if (p1.size() != nk) throw InvalidInput("initial belief does not live on K");
  if (horizon == 0) throw InvalidInput("horizon must be at least 1");
  const CounterRng rng(seed, trial);
  PomdpTrajectory tr;
  tr.states.push_back(rng.sample(p1.weights(), 0, 2));
  ProbVector belief = p1;
  controller.start(pomdp, p1);
  double tot_r = 0.0, tot_e = 0.0;
  for (std::size_t m = 1; m <= horizon; ++m) {
    const std::size_t k = tr.states.back();
    const std::size_t i = draw_action(controller.decide(m), pomdp.num_actions(), rng, m);
    const double r = pomdp.g(k, i), e = expected_payoff(pomdp, belief, i);
    const std::size_t j = rng.sample(pomdp.q(k, i).weights(), m, 1);
    const std::size_t kp = j / ns, s = j % ns;
    tr.actions.push_back(i);
    tr.signals.push_back(s);
    tr.states.push_back(kp);
    tr.realized.push_back(r);
    tr.expected.push_back(e);
    tot_r += r;
    tot_e += e;
    tr.realized_average.push_back(tot_r / static_cast<double>(m));
    tr.expected_average.push_back(tot_e / static_cast<double>(m));
    belief = belief_update(pomdp, belief, i, s).posterior;
    controller.observe(i, s);
  }
  return tr;
}

JointChainReport joint_chain_check(const FinitePOMDP& pomdp, const BeliefHouse& belief_house,
                                   const InvariantCertificate& certificate, std::size_t horizon,
                                   std::size_t trials, std::uint64_t seed) {
  if (horizon == 0 || trials < 2) throw InvalidInput("joint chain check needs a horizon and two trials");
  JointChainReport rep;
  rep.horizon = horizon;
  rep.trials = trials;
  rep.grid_slack = belief_house.grid.error_bound();
  const ProbVector& mu = certificate.mu_star;
  for (std::size_t x : mu.support()) {
    const ProbVector p = belief_house.grid.node(belief_house.states[x].node);
    const auto& row = certificate.selector[x];
    for (std::size_t i = 0; i < row.size(); ++i) rep.predicted += mu[x] * row[i] * expected_payoff(pomdp, p, i);
  }
  std::vector<double> real(trials), expd(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const CounterRng rng(seed, t);
    const std::size_t x0 = rng.sample(mu.weights(), 0, 3);
    const ProbVector p1 = belief_house.grid.node(belief_house.states[x0].node);
    HouseController ctl(belief_house, certificate.strategy, x0);
    const auto tr = pomdp_simulate(pomdp, p1, ctl, horizon, seed, t);
    real[t] = tr.realized_average.back();
    expd[t] = tr.expected_average.back();
    rep.re_anchors += ctl.re_anchors();
  }
  auto stats = [trials](const std::vector<double>& v, double& mean, double& se) {
    mean = 0.0;
    for (double a : v) mean += a;
    mean /= static_cast<double>(trials);
    double q = 0.0;
    for (double a : v) q += (a - mean) * (a - mean);
    se = std::sqrt(q / static_cast<double>(trials - 1) / static_cast<double>(trials));
  };
  stats(real, rep.realized_mean, rep.realized_se);
  stats(expd, rep.expected_mean, rep.expected_se);
  std::vector<double> diff(trials);
  for (std::size_t t = 0; t < trials; ++t) diff[t] = real[t] - expd[t];
  double dmean = 0.0;
  stats(diff, dmean, rep.difference_se);
  rep.tracks_agree = std::abs(dmean) <= 3 * rep.difference_se + 1e-12;
  rep.matches_predicted = std::abs(rep.realized_mean - rep.predicted) <= 3 * rep.realized_se + rep.grid_slack;
  return rep;
}

}  // namespace pathwise
