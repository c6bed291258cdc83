#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pathwise/house.hpp"
#include "pathwise/invariant.hpp"
#include "pathwise/metric.hpp"
#include "pathwise/rng.hpp"
#include "pathwise/strategy.hpp"

namespace pathwise {

/// (K, I, S, g, q) with q(k, i) a law on K x S, indexed k' * |S| + s.
class FinitePOMDP {
 public:
  FinitePOMDP(std::vector<std::string> states, std::vector<std::string> actions,
              std::vector<std::string> signals, std::vector<std::vector<double>> g,
              std::vector<std::vector<ProbVector>> q);

  std::size_t num_states() const { return states_.size(); }
  std::size_t num_actions() const { return actions_.size(); }
  std::size_t num_signals() const { return signals_.size(); }
  const std::vector<std::string>& states() const { return states_; }
  const std::vector<std::string>& actions() const { return actions_; }
  const std::vector<std::string>& signals() const { return signals_; }
  double g(std::size_t k, std::size_t i) const { return g_[k][i]; }
  const ProbVector& q(std::size_t k, std::size_t i) const { return q_[k][i]; }
  double q(std::size_t k, std::size_t i, std::size_t kp, std::size_t s) const {
    return q_[k][i][kp * signals_.size() + s];
  }
  const std::vector<std::vector<double>>& payoffs() const { return g_; }
  const std::vector<std::vector<ProbVector>>& transitions() const { return q_; }

 private:
  std::vector<std::string> states_, actions_, signals_;
  std::vector<std::vector<double>> g_;
  std::vector<std::vector<ProbVector>> q_;
};

/// g(p, i) = sum_k p(k) g(k, i).
double expected_payoff(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i);

/// P(s | p, i) for every signal.
std::vector<double> signal_probabilities(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i);

struct BeliefUpdate {
  ProbVector posterior;
  double signal_probability = 0.0;
};

/// Bayes update; throws ImpossibleObservation when P(s | p, i) <= 1e-15.
BeliefUpdate belief_update(const FinitePOMDP& pomdp, const ProbVector& p, std::size_t i, std::size_t s);

/// Beliefs with denominator D: all compositions of D into |K| parts.
class BeliefGrid {
 public:
  BeliefGrid(std::size_t dimension, std::size_t resolution);

  std::size_t dimension() const { return dimension_; }
  std::size_t resolution() const { return resolution_; }
  std::size_t size() const { return counts_.size(); }
  const std::vector<std::size_t>& counts(std::size_t j) const { return counts_[j]; }
  ProbVector node(std::size_t j) const;
  std::optional<std::size_t> find(const std::vector<std::size_t>& counts) const;
  /// Nearest node in l1; among ties the lexicographically smallest count vector.
  std::size_t project(const ProbVector& p) const;
  double l1(std::size_t a, std::size_t b) const;
  /// Worst-case l1 projection error, |K| / D.
  double error_bound() const { return static_cast<double>(dimension_) / static_cast<double>(resolution_); }

 private:
  std::size_t dimension_, resolution_;
  std::vector<std::vector<std::size_t>> counts_;  // lexicographic order
  std::map<std::vector<std::size_t>, std::size_t> index_;
};

struct BeliefHouseState {
  double a = 0.0;         // payoff coordinate, stored exactly
  std::size_t action = 0;
  std::size_t node = 0;
};

/// The house on [0,1] x I x grid reachable from every (0, 0, node).
struct BeliefHouse {
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  GamblingHouse house;
  BeliefGrid grid;
  std::vector<BeliefHouseState> states;
  std::vector<std::size_t> node_state;  // index of (0, 0, node)
  std::size_t num_actions = 0, num_signals = 0;
  /// successor_[(node * |I| + i) * |S| + s]: state after playing i and seeing s.
  std::vector<std::size_t> successor_table;

  std::size_t embed(const ProbVector& p1) const { return node_state[grid.project(p1)]; }
  /// npos when s has probability zero under the grid belief.
  std::size_t successor(std::size_t x, std::size_t i, std::size_t s) const {
    return successor_table[(states[x].node * num_actions + i) * num_signals + s];
  }
};

BeliefHouse pomdp_to_house(const FinitePOMDP& pomdp, const BeliefGrid& grid);

/// Online decision maker for pomdp_simulate. Decisions may use only
/// past actions and signals (and the prior).
class PomdpController {
 public:
  virtual ~PomdpController() = default;
  virtual void start(const FinitePOMDP& pomdp, const ProbVector& p1) = 0;
  /// Behavior weights must stay valid until the next call.
  virtual Decision decide(std::size_t stage) = 0;
  virtual void observe(std::size_t action, std::size_t signal) = 0;
};

/// Decisions as a function of the (action, signal) history.
class HistoryController final : public PomdpController {
 public:
  using Rule = std::function<Decision(const std::vector<std::pair<std::size_t, std::size_t>>&)>;
  explicit HistoryController(Rule rule) : rule_(std::move(rule)) {}
  void start(const FinitePOMDP&, const ProbVector&) override { history_.clear(); }
  Decision decide(std::size_t) override { return rule_(history_); }
  void observe(std::size_t a, std::size_t s) override { history_.emplace_back(a, s); }

 private:
  Rule rule_;
  std::vector<std::pair<std::size_t, std::size_t>> history_;
};

/// Plays a belief-house strategy on the gridded filter. When the grid
/// belief gives the observed signal probability zero, the filter is
/// re-anchored at (0, 0, project(exact posterior)).
class HouseController final : public PomdpController {
 public:
  HouseController(const BeliefHouse& belief_house, Strategy strategy,
                  std::optional<std::size_t> initial_state = std::nullopt);
  void start(const FinitePOMDP& pomdp, const ProbVector& p1) override;
  Decision decide(std::size_t stage) override;
  void observe(std::size_t action, std::size_t signal) override;

  std::size_t re_anchors() const { return re_anchors_; }
  std::size_t current_state() const { return history_.back(); }

 private:
  const BeliefHouse* bh_;
  const FinitePOMDP* pomdp_ = nullptr;
  Strategy strategy_;
  std::optional<std::size_t> initial_;
  std::vector<std::size_t> history_;
  std::optional<ProbVector> exact_;
  std::size_t re_anchors_ = 0;
};

struct PomdpTrajectory {
  std::vector<std::size_t> states;   // k_1..k_{T+1}
  std::vector<std::size_t> actions;  // i_1..i_T
  std::vector<std::size_t> signals;  // s_1..s_T
  std::vector<double> realized;      // g(k_m, i_m)
  std::vector<double> expected;      // g(p_m, i_m) on the exact belief recursion
  std::vector<double> realized_average;
  std::vector<double> expected_average;
};

PomdpTrajectory pomdp_simulate(const FinitePOMDP& pomdp, const ProbVector& p1, PomdpController& controller,
                               std::size_t horizon, std::uint64_t seed, std::uint64_t trial = 0);

struct JointChainReport {
  std::size_t horizon = 0, trials = 0;
  double realized_mean = 0.0, realized_se = 0.0;
  double expected_mean = 0.0, expected_se = 0.0;
  double difference_se = 0.0;  // SE of realized minus expected, per trial
  double predicted = 0.0;      // sum_x mu*(x) sum_i sigma*(x)(i) g(p_x, i)
  double grid_slack = 0.0;
  std::size_t re_anchors = 0;
  bool tracks_agree = false;     // |realized - expected| <= 3 SE of the difference
  bool matches_predicted = false;  // |realized - predicted| <= 3 SE + grid slack
};

/// Joint (state, action, belief) chain under sigma* from mu*-distributed
/// starting points of the belief house.
JointChainReport joint_chain_check(const FinitePOMDP& pomdp, const BeliefHouse& belief_house,
                                   const InvariantCertificate& certificate, std::size_t horizon,
                                   std::size_t trials, std::uint64_t seed);

}  // namespace pathwise
