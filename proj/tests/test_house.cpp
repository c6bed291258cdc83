#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pathwise/errors.hpp"
#include "pathwise/house.hpp"
#include "pathwise/simulate.hpp"
#include "pathwise/strategy.hpp"
#include "pathwise/value.hpp"
#include "support.hpp"

using namespace pathwise;
namespace t = pathwise::testing;

namespace {

SelectorTable one_hot(const GamblingHouse& h, const std::vector<std::size_t>& a) {
  SelectorTable s(h.size());
  for (std::size_t x = 0; x < h.size(); ++x) {
    s[x].assign(h.menu_size(x), 0.0);
    s[x][a[x]] = 1.0;
  }
  return s;
}

SelectorTable random_selector(t::Rng& rng, const GamblingHouse& h) {
  SelectorTable s(h.size());
  for (std::size_t x = 0; x < h.size(); ++x) s[x] = t::random_prob(rng, h.menu_size(x), 0.3).vector();
  return s;
}

// Three states on a line with a sticky middle.
GamblingHouse three_state() {
  auto space = FiniteMetricSpace::line({0.0, 1.0, 2.0});
  std::vector<std::vector<ProbVector>> menus{
      {ProbVector({.5, .5, 0}), ProbVector({0, 0, 1})},
      {ProbVector({.2, .6, .2})},
      {ProbVector({0, .3, .7}), ProbVector({1, 0, 0})},
  };
  return GamblingHouse(space, {0.1, 0.5, 0.9}, menus);
}

}  // namespace

TEST_CASE("house validation") {
  auto space = FiniteMetricSpace::discrete(2);
  CHECK_THROWS_AS(GamblingHouse(space, {0.0, 1.5}, {{ProbVector::dirac(2, 0)}, {ProbVector::dirac(2, 0)}}),
                  InvalidInput);
  CHECK_THROWS_AS(GamblingHouse(space, {0.0, 1.0}, {{ProbVector::dirac(2, 0)}, {}}), InvalidInput);
  CHECK_THROWS_AS(GamblingHouse(space, {0.0, 1.0}, {{ProbVector::dirac(3, 0)}, {ProbVector::dirac(2, 0)}}),
                  InvalidInput);
}

TEST_CASE("relaxed_menu_G membership") {
  auto space = FiniteMetricSpace::line({0, 1, 2});
  const ProbVector z({.2, .3, .5});
  GamblingHouse single(space, {0, 0, 0}, {{z}, {z}, {z}});
  CHECK(relaxed_menu_G(single, 0).contains(z));
  CHECK_FALSE(relaxed_menu_G(single, 0).contains(ProbVector({.3, .2, .5})));
  CHECK_THROWS_AS(relaxed_menu_G(single, 3), InvalidInput);

  const auto two = t::two_state_house();
  auto w = relaxed_menu_G(two, 0).decompose(ProbVector({.3, .7}));
  REQUIRE(w.has_value());
  CHECK((*w)[0] == doctest::Approx(.3));
  CHECK((*w)[1] == doctest::Approx(.7));

  // Off-segment probe: midpoint plus an orthogonal perturbation. The LP oracle
  // is checked separately by solving the two-coordinate system by hand.
  const ProbVector u({.6, .2, .2}), v({.2, .2, .6});
  GamblingHouse seg(space, {0, 0, 0}, {{u, v}, {u}, {u}});
  const ProbVector off({.4 - .005, .2 + .01, .4 - .005});
  CHECK(relaxed_menu_G(seg, 0).contains(ProbVector({.4, .2, .4})));
  CHECK_FALSE(relaxed_menu_G(seg, 0).contains(off));
}

TEST_CASE("apply_H examples") {
  const auto h = three_state();
  CHECK(apply_H(h, ProbVector::dirac(3, 0), one_hot(h, {1, 0, 0})) == h.menu(0)[1]);

  const auto abs = t::absorbing_house(0.3);
  CHECK(apply_H(abs, ProbVector::dirac(1, 0), one_hot(abs, {0})) == ProbVector::dirac(1, 0));

  const auto two = t::two_state_house();
  CHECK(apply_H(two, ProbVector({.5, .5}), one_hot(two, {1, 1})) == ProbVector::dirac(2, 1));

  SelectorTable missing(3);
  CHECK_THROWS_AS(apply_H(h, ProbVector({.5, .5, 0}), missing), InvalidInput);
  missing[2] = {1.0, 0.0};
  // Undefined rows off the support are fine.
  CHECK_NOTHROW(apply_H(h, ProbVector::dirac(3, 2), missing));
}

TEST_CASE("apply_H preserves mass") {
  t::Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 7), 3);
    const auto z = t::random_prob(rng, h.size());
    const auto s = random_selector(rng, h);
    // Recompute without renormalization.
    double mass = 0.0;
    for (std::size_t x = 0; x < h.size(); ++x)
      for (std::size_t a = 0; a < h.menu_size(x); ++a)
        for (std::size_t y = 0; y < h.size(); ++y) mass += z[x] * s[x][a] * h.menu(x)[a][y];
    CHECK(std::abs(mass - 1.0) <= 1e-12);
    const auto mu = apply_H(h, z, s);
    double total = 0.0;
    for (double w : mu.weights()) total += w;
    CHECK(std::abs(total - 1.0) <= 1e-12);
  }
}

TEST_CASE("h_membership examples") {
  t::Rng rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 6), 3);
    const auto z = t::random_prob(rng, h.size());
    const auto s = random_selector(rng, h);
    const auto mu = apply_H(h, z, s);
    const auto verdict = h_membership(h, z, mu);
    CHECK(verdict.member);
    const auto again = apply_H(h, z, verdict.witness);
    for (std::size_t y = 0; y < h.size(); ++y) CHECK(std::abs(again[y] - mu[y]) <= 1e-9);
  }
  // H(delta_x) = G(x): a point outside sco F(x) is rejected.
  const auto h = three_state();
  CHECK_FALSE(h_membership(h, ProbVector::dirac(3, 1), ProbVector({.2, .5, .3})).member);
  CHECK(h_membership(h, ProbVector::dirac(3, 0), ProbVector({.25, .25, .5})).member);
}

TEST_CASE("H is linear on distributions") {
  t::Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 2, 6), 3);
    const std::size_t n = h.size();
    const auto z = t::random_prob(rng, n), zp = t::random_prob(rng, n);
    const double lambda = t::uniform(rng, 0.05, 0.95);
    const auto mu = apply_H(h, z, random_selector(rng, h));
    const auto mup = apply_H(h, zp, random_selector(rng, h));
    std::vector<double> zmix(n), mumix(n);
    for (std::size_t x = 0; x < n; ++x) {
      zmix[x] = lambda * z[x] + (1 - lambda) * zp[x];
      mumix[x] = lambda * mu[x] + (1 - lambda) * mup[x];
    }
    const auto zm = ProbVector::renormalized(zmix);
    const auto verdict = h_membership(h, zm, ProbVector::renormalized(mumix));
    CHECK(verdict.member);

    // Converse: the witness for the mixture splits into members of H(z), H(z').
    const auto target = apply_H(h, zm, random_selector(rng, h));
    const auto split = h_membership(h, zm, target);
    REQUIRE(split.member);
    const auto part = apply_H(h, z, split.witness), partp = apply_H(h, zp, split.witness);
    CHECK(h_membership(h, z, part).member);
    CHECK(h_membership(h, zp, partp).member);
    for (std::size_t y = 0; y < n; ++y)
      CHECK(std::abs(lambda * part[y] + (1 - lambda) * partp[y] - target[y]) <= 1e-9);
  }
}

TEST_CASE("strategy kinds") {
  const auto st = Strategy::stationary_pure({1, 0});
  CHECK(st.memory() == Memory::stationary);
  CHECK(st.randomization() == Randomization::pure);
  CHECK(st.decide_markov(5, 0).index == 1);
  CHECK_THROWS_AS(Strategy::stationary_behavior({{0.5, 0.4}}), InvalidInput);
  const auto b = Strategy::stationary_behavior({{0.5, 0.5}, {1.0}});
  CHECK_FALSE(b.decide_markov(1, 0).is_pure());
  CHECK(b.stationary_weights({2, 1}).has_value());

  const auto mk = Strategy::markov_pure({{0, 0}, {1, 1}});
  CHECK(mk.decide_markov(2, 0).index == 1);
  CHECK_THROWS_AS(mk.decide_markov(3, 0), StrategyUndefined);

  const auto sw = Strategy::switching(Strategy::stationary_pure({0, 0}), 2,
                                      {Strategy::stationary_pure({1, 1}), std::nullopt});
  CHECK(sw.memory() == Memory::switching);
  std::vector<std::size_t> hist{0, 0};
  CHECK(sw.decide(hist).index == 0);
  hist.push_back(0);
  CHECK(sw.decide(hist).index == 1);
  hist.back() = 1;
  CHECK_THROWS_AS(sw.decide(hist), StrategyUndefined);
}

TEST_CASE("simulate examples") {
  const auto abs = t::absorbing_house(0.4);
  const auto tr = simulate(abs, 0, Strategy::stationary_pure({0}), 50, 1);
  for (double r : tr.running_averages) CHECK(r == doctest::Approx(0.4));

  const auto two = t::two_state_house();
  const auto go = simulate(two, 0, Strategy::stationary_pure({1, 1}), 100, 3);
  for (double r : go.payoffs) CHECK(r == 1.0);
  CHECK(go.running_averages.back() == 1.0);

  const auto undefined = Strategy::markov_pure({{1, 1}});
  CHECK_THROWS_AS(simulate(two, 0, undefined, 3, 1), StrategyUndefined);
}

TEST_CASE("simulate is reproducible and matches a frozen golden trajectory") {
  const auto h = three_state();
  const auto s = Strategy::stationary_behavior({{.5, .5}, {1.0}, {.25, .75}});
  const auto a = simulate(h, 0, s, 20, 42), b = simulate(h, 0, s, 20, 42);
  CHECK(a.states == b.states);
  CHECK(a.payoffs == b.payoffs);
  CHECK(a.running_averages == b.running_averages);
  const std::vector<std::size_t> golden{0, 0, 1, 1, 2, 0, 2, 0, 0, 1, 1, 0, 0, 2, 0, 2, 0, 0, 0, 2, 0};
  CHECK(a.states == golden);
  double total = 0.0;
  for (std::size_t m = 0; m < a.horizon(); ++m) {
    total += a.payoffs[m];
    CHECK(std::abs(a.running_averages[m] - total / static_cast<double>(m + 1)) <= 1e-12);
    CHECK(a.payoffs[m] == h.payoff(a.states[m + 1]));
  }
  CHECK(simulate(h, 0, s, 20, 43).states != a.states);
}

TEST_CASE("couple_simulate examples") {
  t::Rng rng(8);
  const auto h = t::random_lipschitz_house(rng, 5, 3);
  const auto s = Strategy::stationary_pure(std::vector<std::size_t>(5, 0));
  const auto same = couple_simulate(h, 2, 2, s, 100, 9);
  CHECK(same.x.states == same.y.states);
  for (double d : same.distances) CHECK(d == 0.0);

  auto space = FiniteMetricSpace::line({0.0, 0.7});
  GamblingHouse two_abs(space, {0.2, 0.6}, {{ProbVector::dirac(2, 0)}, {ProbVector::dirac(2, 1)}});
  const auto c = couple_simulate(two_abs, 0, 1, Strategy::stationary_pure({0, 0}), 30, 1);
  for (double d : c.distances) CHECK(d == doctest::Approx(0.7));

  // Broken instance: d(x, y) = 0.1 with disjoint Dirac menus at distance 1.
  FiniteMetricSpace broken_space({"a", "b", "x", "y"},
                                 {{0, 1, .5, .5}, {1, 0, .5, .5}, {.5, .5, 0, .1}, {.5, .5, .1, 0}});
  std::vector<std::vector<ProbVector>> menus{{ProbVector::dirac(4, 0)}, {ProbVector::dirac(4, 1)},
                                             {ProbVector::dirac(4, 0)}, {ProbVector::dirac(4, 1)}};
  GamblingHouse broken(broken_space, {0.5, 0.5, 0.5, 0.5}, menus);
  CHECK_THROWS_AS(couple_simulate(broken, 2, 3, Strategy::stationary_pure({0, 0, 0, 0}), 5, 1),
                  LipschitzViolation);
}

TEST_CASE("coupled distance is a supermartingale and bounds the payoff gap") {
  t::Rng rng(99);
  for (int inst = 0; inst < 5; ++inst) {
    const std::size_t n = t::pick(rng, 3, 6);
    const auto h = t::random_lipschitz_house(rng, n, 3);
    SelectorTable w(n);
    for (std::size_t x = 0; x < n; ++x) w[x] = t::random_prob(rng, h.menu_size(x), 0.0).vector();
    const auto s = Strategy::stationary_behavior(w);
    const std::size_t x0 = 0, y0 = n - 1, T = 40, seeds = 1000;
    const CoupledSimulator sim(h);
    std::vector<double> sum(T + 1, 0.0), sq(T + 1, 0.0);
    std::vector<double> gaps;
    for (std::size_t k = 0; k < seeds; ++k) {
      const auto c = sim.run(x0, y0, s, T, 5, k);
      double g = 0.0;
      for (std::size_t m = 0; m <= T; ++m) {
        sum[m] += c.distances[m];
        sq[m] += c.distances[m] * c.distances[m];
      }
      for (std::size_t m = 0; m < T; ++m) g += std::abs(c.x.payoffs[m] - c.y.payoffs[m]);
      gaps.push_back(g / static_cast<double>(T));
    }
    auto se = [&](std::size_t m) {
      const double mean = sum[m] / seeds;
      return std::sqrt(std::max(0.0, sq[m] / seeds - mean * mean) / seeds);
    };
    for (std::size_t m = 1; m <= T; ++m)
      CHECK(sum[m] / seeds <= sum[m - 1] / seeds + 3 * (se(m) + se(m - 1)) + 1e-12);
    double mean = 0.0, var = 0.0;
    for (double g : gaps) mean += g;
    mean /= seeds;
    for (double g : gaps) var += (g - mean) * (g - mean);
    const double gap_se = std::sqrt(var / (seeds - 1) / seeds);
    CHECK(mean <= h.space().distance(x0, y0) + 3 * gap_se + 1e-12);
  }
}
