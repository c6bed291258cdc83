#include "pathwise/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pathwise/errors.hpp"
#include "pathwise/rng.hpp"
#include "pathwise/simulate.hpp"
#include "pathwise/tolerances.hpp"

namespace pathwise {

FiniteMDP::FiniteMDP(FiniteMetricSpace states, std::vector<std::string> actions,
                     std::vector<std::vector<double>> g, std::vector<std::vector<ProbVector>> q)
    : states_(std::move(states)), actions_(std::move(actions)), g_(std::move(g)), q_(std::move(q)) {
  const std::size_t nk = states_.size(), ni = actions_.size();
  if (ni == 0) throw InvalidInput("MDP needs at least one action");
  if (g_.size() != nk || q_.size() != nk) throw InvalidInput("g and q need one row per state");
  for (std::size_t k = 0; k < nk; ++k) {
    if (g_[k].size() != ni || q_[k].size() != ni)
      throw InvalidInput("g and q rows of state " + std::to_string(k) + " need one entry per action");
    for (std::size_t i = 0; i < ni; ++i) {
      if (!(g_[k][i] >= 0.0 && g_[k][i] <= 1.0))
        throw InvalidInput("g(" + std::to_string(k) + "," + std::to_string(i) + ") is outside [0, 1]");
      if (q_[k][i].size() != nk)
        throw InvalidInput("q(" + std::to_string(k) + "," + std::to_string(i) + ") is not a law on K");
    }
  }
}

std::string MdpLipschitzVerdict::message() const {
  if (ok()) return "MDP is 1-Lipschitz";
  std::ostringstream os;
  if (!transition_ok)
    os << "q(., " << i << ") is not 1-Lipschitz at (k, k') = (" << k << ", " << kp << "): transport cost "
       << cost << " exceeds distance " << distance;
  if (!payoff_ok) {
    if (!transition_ok) os << "; ";
    os << "g(., " << payoff_i << ") is not 1-Lipschitz at (k, k') = (" << payoff_k << ", " << payoff_kp << ")";
  }
  return os.str();
}

MdpLipschitzVerdict check_mdp_lipschitz(const FiniteMDP& mdp) {
  MdpLipschitzVerdict v;
  const auto& space = mdp.states();
  const std::size_t nk = mdp.num_states(), ni = mdp.num_actions();
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t kp = k + 1; kp < nk; ++kp) {
      const double d = space.distance(k, kp);
      for (std::size_t i = 0; i < ni; ++i) {
        if (v.transition_ok) {
          const double c = kr_value(space, mdp.q(k, i), mdp.q(kp, i));
          if (c > d + tol::kLipschitz) {
            v.transition_ok = false;
            v.k = k;
            v.kp = kp;
            v.i = i;
            v.cost = c;
            v.distance = d;
          }
        }
        if (v.payoff_ok && std::abs(mdp.g(k, i) - mdp.g(kp, i)) > d + tol::kLipschitz) {
          v.payoff_ok = false;
          v.payoff_k = k;
          v.payoff_kp = kp;
          v.payoff_i = i;
        }
      }
    }
  return v;
}

MdpReduction mdp_to_house(const FiniteMDP& mdp) {
  MdpReduction red{GamblingHouse(FiniteMetricSpace::discrete(1), {0.0}, {{ProbVector::dirac(1, 0)}}),
                   mdp.num_states(), mdp.num_actions()};
  const std::size_t nk = red.num_states, ni = red.num_actions, n = nk * ni * nk;
  std::vector<std::string> labels(n);
  std::vector<double> payoff(n);
  std::vector<std::vector<ProbVector>> menus(n);
  const auto& ks = mdp.states();
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t i = 0; i < ni; ++i)
      for (std::size_t l = 0; l < nk; ++l) {
        const std::size_t x = red.index(k, i, l);
        labels[x] = "(" + ks.label(k) + "," + mdp.actions()[i] + "," + ks.label(l) + ")";
        payoff[x] = mdp.g(k, i);
        for (std::size_t ip = 0; ip < ni; ++ip) {
          std::vector<double> w(n, 0.0);
          const ProbVector& q = mdp.q(l, ip);
          for (std::size_t lp = 0; lp < nk; ++lp) w[red.index(l, ip, lp)] = q[lp];
          menus[x].push_back(ProbVector(std::move(w)));
        }
      }
  const double diameter = std::max(ks.diameter(), ni > 1 ? 1.0 : 0.0);
  auto metric = [ks, nk, ni](std::size_t a, std::size_t b) {
    const std::size_t ka = a / (nk * ni), kb = b / (nk * ni);
    const std::size_t ia = (a / nk) % ni, ib = (b / nk) % ni;
    return std::max({ks.distance(ka, kb), ia == ib ? 0.0 : 1.0, ks.distance(a % nk, b % nk)});
  };
  red.house = GamblingHouse(FiniteMetricSpace::generated(std::move(labels), metric, diameter), std::move(payoff),
                            std::move(menus));
  return red;
}

Strategy lift_strategy(const MdpReduction& reduction, const Strategy& mdp_strategy) {
  const std::size_t nk = reduction.num_states;
  if (mdp_strategy.is_markov()) {
    return Strategy::markov_rule(
        mdp_strategy.randomization(),
        [mdp_strategy, nk](std::size_t stage, std::size_t x) { return mdp_strategy.decide_markov(stage, x % nk); },
        "lifted " + mdp_strategy.describe());
  }
  return Strategy::history_rule(
      mdp_strategy.randomization(),
      [mdp_strategy, nk](std::span<const std::size_t> h) {
        thread_local std::vector<std::size_t> ks;
        ks.clear();
        for (std::size_t x : h) ks.push_back(x % nk);
        return mdp_strategy.decide(ks);
      },
      "lifted " + mdp_strategy.describe());
}

MdpTrajectory mdp_simulate(const FiniteMDP& mdp, std::size_t k1, const Strategy& strategy,
                           std::size_t horizon, std::uint64_t seed, std::uint64_t trial) {
  if (k1 >= mdp.num_states()) throw InvalidInput("initial state out of range");
  if (horizon == 0) throw InvalidInput("horizon must be at least 1");
  MdpTrajectory tr;
  const CounterRng rng(seed, trial);
  tr.states.push_back(k1);
  for (std::size_t m = 1; m <= horizon; ++m) {
    const std::size_t k = tr.states.back();
    const std::size_t i = draw_action(strategy.decide(tr.states), mdp.num_actions(), rng, m);
    tr.actions.push_back(i);
    tr.payoffs.push_back(mdp.g(k, i));
    tr.states.push_back(rng.sample(mdp.q(k, i).weights(), m, 1));
  }
  return tr;
}

MdpCoupledSimulator::MdpCoupledSimulator(FiniteMDP mdp) : mdp_(std::move(mdp)) {
  const MdpLipschitzVerdict v = check_mdp_lipschitz(mdp_);
  if (!v.ok()) throw LipschitzViolation(v.message());
  const std::size_t nk = mdp_.num_states(), ni = mdp_.num_actions();
  laws_.resize(nk * nk * ni);
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t kp = 0; kp < nk; ++kp)
      for (std::size_t i = 0; i < ni; ++i) {
        const KrResult kr = kr_distance(mdp_.states(), mdp_.q(k, i), mdp_.q(kp, i));
        PairLaw& law = laws_[(k * nk + kp) * ni + i];
        for (std::size_t a = 0; a < nk; ++a)
          for (std::size_t b = 0; b < nk; ++b)
            if (kr.coupling(a, b) > 0.0) {
              law.to_x.push_back(a);
              law.to_y.push_back(b);
              law.prob.push_back(kr.coupling(a, b));
            }
      }
}

MdpCoupledTrajectory MdpCoupledSimulator::run(std::size_t k1, std::size_t k1p, const Strategy& strategy,
                                              std::size_t horizon, std::uint64_t seed, std::uint64_t trial) const {
  const std::size_t nk = mdp_.num_states(), ni = mdp_.num_actions();
  if (k1 >= nk || k1p >= nk) throw InvalidInput("initial state out of range");
  if (horizon == 0) throw InvalidInput("horizon must be at least 1");
  MdpCoupledTrajectory out;
  const CounterRng rng(seed, trial);
  out.x.states.push_back(k1);
  out.y.states.push_back(k1p);
  out.distances.push_back(mdp_.states().distance(k1, k1p));
  for (std::size_t m = 1; m <= horizon; ++m) {
    const std::size_t k = out.x.states.back(), kp = out.y.states.back();
    const std::size_t i = draw_action(strategy.decide(out.x.states), ni, rng, m);
    out.x.actions.push_back(i);
    out.y.actions.push_back(i);
    out.x.payoffs.push_back(mdp_.g(k, i));
    out.y.payoffs.push_back(mdp_.g(kp, i));
    const PairLaw& law = laws_[(k * nk + kp) * ni + i];
    const std::size_t j = rng.sample(law.prob, m, 1);
    out.x.states.push_back(law.to_x[j]);
    out.y.states.push_back(law.to_y[j]);
    out.distances.push_back(mdp_.states().distance(law.to_x[j], law.to_y[j]));
  }
  return out;
}

MdpCoupledTrajectory mdp_couple_simulate(const FiniteMDP& mdp, std::size_t k1, std::size_t k1p,
                                         const Strategy& strategy, std::size_t horizon, std::uint64_t seed) {
  return MdpCoupledSimulator(mdp).run(k1, k1p, strategy, horizon, seed);
}

}  // namespace pathwise
