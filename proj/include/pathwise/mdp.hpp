#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/metric.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise {

/// (K, I, g, q) with g(k, i) in [0, 1] and q(k, i) a law on K.
class FiniteMDP {
 public:
  FiniteMDP(FiniteMetricSpace states, std::vector<std::string> actions, std::vector<std::vector<double>> g,
            std::vector<std::vector<ProbVector>> q);

  const FiniteMetricSpace& states() const { return states_; }
  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  const std::vector<std::string>& actions() const { return actions_; }
  double g(std::size_t k, std::size_t i) const { return g_[k][i]; }
  const ProbVector& q(std::size_t k, std::size_t i) const { return q_[k][i]; }
  const std::vector<std::vector<double>>& payoffs() const { return g_; }
  const std::vector<std::vector<ProbVector>>& transitions() const { return q_; }

 private:
  FiniteMetricSpace states_;
  std::vector<std::string> actions_;
  std::vector<std::vector<double>> g_;
  std::vector<std::vector<ProbVector>> q_;
};

struct MdpLipschitzVerdict {
  bool transition_ok = true;
  std::size_t k = 0, kp = 0, i = 0;  // first pair with d_KR(q(k,i), q(k',i)) > d_K(k,k')
  double cost = 0.0, distance = 0.0;
  bool payoff_ok = true;
  std::size_t payoff_k = 0, payoff_kp = 0, payoff_i = 0;

  bool ok() const { return transition_ok && payoff_ok; }
  std::string message() const;
};

/// q(., i) and g(., i) 1-Lipschitz for every action i.
MdpLipschitzVerdict check_mdp_lipschitz(const FiniteMDP& mdp);

/// Gambling house on K x I x K. State (k, i, l) is reached after playing i in
/// k and landing in l; its payoff is g(k, i).
struct MdpReduction {
  GamblingHouse house;
  std::size_t num_states = 0, num_actions = 0;

  std::size_t index(std::size_t k, std::size_t i, std::size_t l) const {
    return (k * num_actions + i) * num_states + l;
  }
  /// k1 -> (k0, i0, k1) with k0 = i0 = 0.
  std::size_t embed(std::size_t k1) const { return index(0, 0, k1); }
  std::size_t current(std::size_t x) const { return x % num_states; }
  std::size_t action(std::size_t x) const { return (x / num_states) % num_actions; }
  std::size_t previous(std::size_t x) const { return x / (num_states * num_actions); }
};

MdpReduction mdp_to_house(const FiniteMDP& mdp);

/// House strategy playing `mdp_strategy` on the current-state coordinate.
/// Markov strategies stay Markov; others see the recovered K history.
Strategy lift_strategy(const MdpReduction& reduction, const Strategy& mdp_strategy);

struct MdpTrajectory {
  std::vector<std::size_t> states;   // k_1..k_{T+1}
  std::vector<std::size_t> actions;  // i_1..i_T
  std::vector<double> payoffs;       // g(k_m, i_m)
};

/// The strategy sees k_1..k_m when choosing i_m. Draws use the same
/// (stage, slot) counters as simulate() on the reduced house.
MdpTrajectory mdp_simulate(const FiniteMDP& mdp, std::size_t k1, const Strategy& strategy,
                           std::size_t horizon, std::uint64_t seed, std::uint64_t trial = 0);

struct MdpCoupledTrajectory {
  MdpTrajectory x;
  MdpTrajectory y;                // plays x.actions
  std::vector<double> distances;  // d_K(K_m, K'_m), m = 1..T+1
};

/// Both sides play the action chosen on the X side; successors are drawn
/// from an optimal coupling of q(K_m, I_m) and q(K'_m, I_m).
class MdpCoupledSimulator {
 public:
  /// Throws LipschitzViolation when check_mdp_lipschitz fails.
  explicit MdpCoupledSimulator(FiniteMDP mdp);

  MdpCoupledTrajectory run(std::size_t k1, std::size_t k1p, const Strategy& strategy, std::size_t horizon,
                           std::uint64_t seed, std::uint64_t trial = 0) const;

 private:
  struct PairLaw {
    std::vector<std::size_t> to_x, to_y;
    std::vector<double> prob;
  };
  FiniteMDP mdp_;
  std::vector<PairLaw> laws_;  // (k * |K| + k') * |I| + i
};

MdpCoupledTrajectory mdp_couple_simulate(const FiniteMDP& mdp, std::size_t k1, std::size_t k1p,
                                         const Strategy& strategy, std::size_t horizon, std::uint64_t seed);

}  // namespace pathwise
