#include "pathwise/simulate.hpp"

#include "pathwise/value.hpp"

namespace pathwise {

Trajectory simulate(const GamblingHouse& house, std::size_t x0, const Strategy& strategy,
                    std::size_t horizon, std::uint64_t seed, std::uint64_t trial) {
  if (horizon == 0) throw InvalidInput("horizon must be at least 1");
  if (x0 >= house.size()) throw InvalidInput("initial state out of range");
  Trajectory tr;
  tr.states.reserve(horizon + 1);
  tr.payoffs.reserve(horizon);
  tr.running_averages.reserve(horizon);
  tr.states.push_back(x0);
  double total = 0.0;
  const CounterRng rng(seed, trial);
  run_path(house, x0, strategy, horizon, rng, [&](std::size_t m, std::size_t, std::size_t x) {
    tr.states.push_back(x);
    const double r = house.payoff(x);
    tr.payoffs.push_back(r);
    total += r;
    tr.running_averages.push_back(total / static_cast<double>(m));
  });
  return tr;
}

CoupledSimulator::CoupledSimulator(GamblingHouse house) : house_(std::move(house)) {
  const LipschitzVerdict verdict = check_lipschitz(house_);
  if (!verdict.correspondence_ok) throw LipschitzViolation(verdict.message());
  const std::size_t n = house_.size();
  std::size_t total = 0;
  for (std::size_t x = 0; x < n; ++x) {
    offset_.push_back(total);
    total += house_.menu_size(x);
  }
  laws_.resize(total * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < house_.menu_size(x); ++a) {
      const ProbVector& u = house_.menu(x)[a];
      for (std::size_t y = 0; y < n; ++y) {
        const SelectorChoice choice = coupling_selector_psi(house_.space(), u, house_.menu(y));
        PairLaw& law = laws_[(offset_[x] + a) * n + y];
        law.y_index = choice.index;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double p = choice.coupling(i, j);
            if (p <= 0.0) continue;
            law.to_x.push_back(i);
            law.to_y.push_back(j);
            law.prob.push_back(p);
          }
      }
    }
  }
}

const CoupledSimulator::PairLaw& CoupledSimulator::law(std::size_t x, std::size_t a, std::size_t y) const {
  return laws_[(offset_[x] + a) * house_.size() + y];
}

CoupledTrajectory CoupledSimulator::run(std::size_t x0, std::size_t y0, const Strategy& strategy,
                                        std::size_t horizon, std::uint64_t seed, std::uint64_t trial) const {
  const std::size_t n = house_.size();
  if (x0 >= n || y0 >= n) throw InvalidInput("initial state out of range");
  if (horizon == 0) throw InvalidInput("horizon must be at least 1");
  CoupledTrajectory out;
  const CounterRng rng(seed, trial);
  std::vector<std::size_t> history{x0};
  std::size_t x = x0, y = y0;
  out.x.states.push_back(x);
  out.y.states.push_back(y);
  out.distances.push_back(house_.space().distance(x, y));
  double tx = 0.0, ty = 0.0;
  for (std::size_t m = 1; m <= horizon; ++m) {
    const std::size_t a = draw_action(strategy.decide(history), house_.menu_size(x), rng, m);
    const PairLaw& l = law(x, a, y);
    const std::size_t k = rng.sample(l.prob, m, 1);
    x = l.to_x[k];
    y = l.to_y[k];
    history.push_back(x);
    for (auto [tr, s, tot] : {std::tuple{&out.x, x, &tx}, std::tuple{&out.y, y, &ty}}) {
      const double r = house_.payoff(s);
      *tot += r;
      tr->states.push_back(s);
      tr->payoffs.push_back(r);
      tr->running_averages.push_back(*tot / static_cast<double>(m));
    }
    out.distances.push_back(house_.space().distance(x, y));
  }
  return out;
}

CoupledTrajectory couple_simulate(const GamblingHouse& house, std::size_t x0, std::size_t y0,
                                  const Strategy& strategy, std::size_t horizon, std::uint64_t seed) {
  return CoupledSimulator(house).run(x0, y0, strategy, horizon, seed);
}

}  // namespace pathwise
