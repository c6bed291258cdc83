#include "pathwise/strategy.hpp"

#include <cmath>

#include "pathwise/errors.hpp"

namespace pathwise {

const char* to_string(Randomization r) { return r == Randomization::pure ? "pure" : "behavior"; }

const char* to_string(Memory m) {
  switch (m) {
    case Memory::stationary: return "stationary";
    case Memory::markov: return "markov";
    case Memory::history: return "history";
    case Memory::switching: return "switching";
  }
  return "unknown";
}

struct Strategy::Impl {
  virtual ~Impl() = default;
  virtual Randomization randomization() const = 0;
  virtual Memory memory() const = 0;
  virtual std::string describe() const = 0;
  virtual Decision decide(std::span<const std::size_t> history) const = 0;
  virtual Decision decide_markov(std::size_t, std::size_t) const {
    throw InvalidInput("strategy is not Markov");
  }
};

namespace {

struct StationaryPure final : Strategy::Impl {
  std::vector<std::size_t> choice;
  Randomization randomization() const override { return Randomization::pure; }
  Memory memory() const override { return Memory::stationary; }
  std::string describe() const override { return "stationary pure"; }
  Decision decide_markov(std::size_t, std::size_t x) const override {
    if (x >= choice.size()) throw StrategyUndefined("stationary strategy undefined at state " + std::to_string(x));
    return Decision::pure(choice[x]);
  }
  Decision decide(std::span<const std::size_t> h) const override { return decide_markov(h.size(), h.back()); }
};

struct StationaryBehavior final : Strategy::Impl {
  std::vector<std::vector<double>> weights;
  Randomization randomization() const override { return Randomization::behavior; }
  Memory memory() const override { return Memory::stationary; }
  std::string describe() const override { return "stationary behavior"; }
  Decision decide_markov(std::size_t, std::size_t x) const override {
    if (x >= weights.size() || weights[x].empty())
      throw StrategyUndefined("stationary strategy undefined at state " + std::to_string(x));
    return Decision::behavior(weights[x]);
  }
  Decision decide(std::span<const std::size_t> h) const override { return decide_markov(h.size(), h.back()); }
};

struct MarkovPure final : Strategy::Impl {
  std::vector<std::vector<std::size_t>> table;
  Randomization randomization() const override { return Randomization::pure; }
  Memory memory() const override { return Memory::markov; }
  std::string describe() const override {
    return "markov pure (" + std::to_string(table.size()) + " stages)";
  }
  Decision decide_markov(std::size_t m, std::size_t x) const override {
    if (m == 0 || m > table.size() || x >= table[m - 1].size())
      throw StrategyUndefined("markov strategy undefined at stage " + std::to_string(m));
    return Decision::pure(table[m - 1][x]);
  }
  Decision decide(std::span<const std::size_t> h) const override { return decide_markov(h.size(), h.back()); }
};

struct MarkovRuleImpl final : Strategy::Impl {
  Randomization kind;
  Strategy::MarkovRule rule;
  std::string text;
  Randomization randomization() const override { return kind; }
  Memory memory() const override { return Memory::markov; }
  std::string describe() const override { return text.empty() ? "markov rule" : text; }
  Decision decide_markov(std::size_t m, std::size_t x) const override { return rule(m, x); }
  Decision decide(std::span<const std::size_t> h) const override { return rule(h.size(), h.back()); }
};

struct HistoryRuleImpl final : Strategy::Impl {
  Randomization kind;
  Strategy::HistoryRule rule;
  std::string text;
  Randomization randomization() const override { return kind; }
  Memory memory() const override { return Memory::history; }
  std::string describe() const override { return text.empty() ? "history rule" : text; }
  Decision decide(std::span<const std::size_t> h) const override { return rule(h); }
};

struct Switching final : Strategy::Impl {
  Strategy first;
  std::size_t switch_stage;
  std::vector<std::optional<Strategy>> successor;

  Switching(Strategy f, std::size_t s, std::vector<std::optional<Strategy>> succ)
      : first(std::move(f)), switch_stage(s), successor(std::move(succ)) {}

  Randomization randomization() const override {
    if (first.randomization() == Randomization::behavior) return Randomization::behavior;
    for (const auto& s : successor)
      if (s && s->randomization() == Randomization::behavior) return Randomization::behavior;
    return Randomization::pure;
  }
  Memory memory() const override { return Memory::switching; }
  std::string describe() const override {
    return "switching at stage " + std::to_string(switch_stage) + " from " + first.describe();
  }
  Decision decide(std::span<const std::size_t> h) const override {
    if (h.size() <= switch_stage) return first.decide(h);
    const std::size_t pivot = h[switch_stage];
    if (pivot >= successor.size() || !successor[pivot])
      throw StrategyUndefined("no successor strategy for state " + std::to_string(pivot));
    return successor[pivot]->decide(h.subspan(switch_stage));
  }
};

}  // namespace

Strategy Strategy::stationary_pure(std::vector<std::size_t> choice) {
  auto impl = std::make_shared<StationaryPure>();
  impl->choice = std::move(choice);
  return Strategy(std::move(impl));
}

Strategy Strategy::stationary_behavior(std::vector<std::vector<double>> weights) {
  for (const auto& row : weights) {
    if (row.empty()) continue;
    double s = 0.0;
    for (double w : row) {
      if (w < 0.0) throw InvalidInput("behavior weight is negative");
      s += w;
    }
    if (std::abs(s - 1.0) > 1e-9) throw InvalidInput("behavior weights do not sum to one");
  }
  auto impl = std::make_shared<StationaryBehavior>();
  impl->weights = std::move(weights);
  return Strategy(std::move(impl));
}

Strategy Strategy::markov_pure(std::vector<std::vector<std::size_t>> table) {
  auto impl = std::make_shared<MarkovPure>();
  impl->table = std::move(table);
  return Strategy(std::move(impl));
}

Strategy Strategy::markov_rule(Randomization kind, MarkovRule rule, std::string description) {
  auto impl = std::make_shared<MarkovRuleImpl>();
  impl->kind = kind;
  impl->rule = std::move(rule);
  impl->text = std::move(description);
  return Strategy(std::move(impl));
}

Strategy Strategy::history_rule(Randomization kind, HistoryRule rule, std::string description) {
  auto impl = std::make_shared<HistoryRuleImpl>();
  impl->kind = kind;
  impl->rule = std::move(rule);
  impl->text = std::move(description);
  return Strategy(std::move(impl));
}

Strategy Strategy::switching(Strategy first, std::size_t switch_stage,
                             std::vector<std::optional<Strategy>> successor) {
  return Strategy(std::make_shared<Switching>(std::move(first), switch_stage, std::move(successor)));
}

Randomization Strategy::randomization() const { return impl_->randomization(); }
Memory Strategy::memory() const { return impl_->memory(); }
std::string Strategy::describe() const { return impl_->describe(); }

Decision Strategy::decide(std::span<const std::size_t> history) const {
  if (history.empty()) throw InvalidInput("decision requested with an empty history");
  return impl_->decide(history);
}

Decision Strategy::decide_markov(std::size_t stage, std::size_t state) const {
  return impl_->decide_markov(stage, state);
}

std::optional<std::vector<std::size_t>> Strategy::stationary_choices() const {
  if (const auto* p = dynamic_cast<const StationaryPure*>(impl_.get())) return p->choice;
  return std::nullopt;
}

std::optional<std::vector<std::vector<double>>> Strategy::stationary_weights(
    const std::vector<std::size_t>& menu_sizes) const {
  if (const auto* p = dynamic_cast<const StationaryBehavior*>(impl_.get())) return p->weights;
  if (const auto* p = dynamic_cast<const StationaryPure*>(impl_.get())) {
    std::vector<std::vector<double>> rows(p->choice.size());
    for (std::size_t x = 0; x < rows.size(); ++x) {
      rows[x].assign(x < menu_sizes.size() ? menu_sizes[x] : p->choice[x] + 1, 0.0);
      rows[x].at(p->choice[x]) = 1.0;
    }
    return rows;
  }
  return std::nullopt;
}

}  // namespace pathwise
