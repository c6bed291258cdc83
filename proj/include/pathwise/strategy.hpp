#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pathwise {

enum class Randomization { pure, behavior };
enum class Memory { stationary, markov, history, switching };

const char* to_string(Randomization r);
const char* to_string(Memory m);

/// A choice at one decision point: a menu index, or weights over the menu.
struct Decision {
  std::size_t index = 0;
  std::span<const double> weights;  // empty for pure decisions

  bool is_pure() const { return weights.empty(); }
  static Decision pure(std::size_t a) { return {a, {}}; }
  static Decision behavior(std::span<const double> w) { return {0, w}; }
};

/// Immutable, cheaply copyable policy in a gambling house.
///
/// Stage convention: the decision at stage m (m >= 1) is taken in state
/// x_{m-1} and the history passed to decide() is x_0, ..., x_{m-1}.
class Strategy {
 public:
  using MarkovRule = std::function<Decision(std::size_t stage, std::size_t state)>;
  using HistoryRule = std::function<Decision(std::span<const std::size_t> history)>;

  static Strategy stationary_pure(std::vector<std::size_t> choice);
  static Strategy stationary_behavior(std::vector<std::vector<double>> weights);
  /// table[m-1][x] is the menu index at stage m; undefined past the table.
  static Strategy markov_pure(std::vector<std::vector<std::size_t>> table);
  /// Decisions computed on demand from (stage, state). Spans returned by the
  /// rule must outlive the strategy.
  static Strategy markov_rule(Randomization kind, MarkovRule rule, std::string description = {});
  static Strategy history_rule(Randomization kind, HistoryRule rule, std::string description = {});
  /// Plays `first` through stage switch_stage, then continues with
  /// successor[x_{switch_stage}], which sees the history from that state on.
  static Strategy switching(Strategy first, std::size_t switch_stage,
                            std::vector<std::optional<Strategy>> successor);

  Randomization randomization() const;
  Memory memory() const;
  /// True when decisions depend only on (stage, current state).
  bool is_markov() const { return memory() == Memory::stationary || memory() == Memory::markov; }
  std::string describe() const;

  Decision decide(std::span<const std::size_t> history) const;
  /// Only for Markov or stationary strategies.
  Decision decide_markov(std::size_t stage, std::size_t state) const;

  /// Stationary pure table when the strategy is one.
  std::optional<std::vector<std::size_t>> stationary_choices() const;
  /// Stationary behavior rows (pure rows become one-hot) when stationary.
  std::optional<std::vector<std::vector<double>>> stationary_weights(
      const std::vector<std::size_t>& menu_sizes) const;

  struct Impl;

 private:
  explicit Strategy(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

}  // namespace pathwise
