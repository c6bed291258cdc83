#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pathwise/errors.hpp"
#include "pathwise/value.hpp"
#include "support.hpp"

using namespace pathwise;
namespace t = pathwise::testing;

namespace {

// State 2 is a low-payoff trap that can be avoided from 0 but not left once entered.
GamblingHouse trap_house() {
  auto space = FiniteMetricSpace::discrete(3);
  std::vector<std::vector<ProbVector>> menus{
      {ProbVector({0, 1, 0}), ProbVector({0, .5, .5})},
      {ProbVector({.5, .5, 0}), ProbVector({0, 0, 1})},
      {ProbVector({0, 0, 1})},
  };
  return GamblingHouse(space, {0.0, 1.0, 0.2}, menus);
}

// Deterministic 2-cycle.
GamblingHouse cycle_house() {
  auto space = FiniteMetricSpace::discrete(2);
  return GamblingHouse(space, {0.0, 1.0}, {{ProbVector::dirac(2, 1)}, {ProbVector::dirac(2, 0)}});
}

double span(const std::vector<double>& h) {
  return *std::max_element(h.begin(), h.end()) - *std::min_element(h.begin(), h.end());
}

}  // namespace

TEST_CASE("value_n examples") {
  auto space = FiniteMetricSpace::discrete(3);
  GamblingHouse constant(space, {.4, .4, .4}, {{ProbVector({.2, .3, .5})}, {ProbVector::dirac(3, 0)},
                                                {ProbVector::dirac(3, 2), ProbVector::dirac(3, 1)}});
  const auto vt = value_n(constant, 10);
  for (double v : vt.values) CHECK(v == doctest::Approx(.4).epsilon(1e-14));

  const auto two = value_n(t::two_state_house(), 50);
  for (const auto& v : two.by_horizon) {
    CHECK(v[0] == 1.0);
    CHECK(v[1] == 1.0);
  }

  // Transient low-payoff start: v_1 < v_2.
  auto line = FiniteMetricSpace::line({0, 1, 2});
  GamblingHouse transient(line, {0.0, 0.3, 1.0},
                          {{ProbVector({.5, .5, 0}), ProbVector({0, 1, 0})},
                           {ProbVector({0, 0, 1})},
                           {ProbVector({0, 0, 1})}});
  const auto tv = value_n(transient, 3);
  CHECK(tv.by_horizon[0][0] < tv.by_horizon[1][0]);
  for (std::size_t n = 1; n <= 3; ++n)
    for (std::size_t x = 0; x < 3; ++x) CHECK(tv.by_horizon[n - 1][x] == doctest::Approx(t::tree_value(transient, x, n)));
  CHECK(tv.by_horizon[1][0] == doctest::Approx(t::enumerated_value_2(transient, 0)));
  CHECK_THROWS_AS(value_n(transient, 0), InvalidInput);
}

TEST_CASE("value_n matches brute-force strategy enumeration") {
  t::Rng rng(1234);
  for (int trial = 0; trial < 50; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 4), 3);
    const auto vt = value_n(h, 3);
    for (std::size_t x = 0; x < h.size(); ++x) {
      CHECK(std::abs(vt.by_horizon[1][x] - t::enumerated_value_2(h, x)) <= 1e-12);
      for (std::size_t n = 1; n <= 3; ++n) CHECK(std::abs(vt.by_horizon[n - 1][x] - t::tree_value(h, x, n)) <= 1e-12);
    }
  }
}

TEST_CASE("ValueTable invariants and optimal strategy") {
  t::Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 6), 3);
    const std::size_t n = 12;
    const auto vt = value_n(h, n);
    const double rmin = *std::min_element(h.payoffs().begin(), h.payoffs().end());
    for (std::size_t m = 1; m <= n; ++m) {
      for (std::size_t x = 0; x < h.size(); ++x) {
        const double v = vt.by_horizon[m - 1][x];
        CHECK(v <= 1.0);
        CHECK(v >= rmin - 1e-12);
        // Bellman consistency in sum form.
        double best = -1.0;
        for (const ProbVector& z : h.menu(x)) {
          double s = 0.0;
          for (std::size_t y = 0; y < h.size(); ++y)
            s += z[y] * (h.payoff(y) + (m > 1 ? (m - 1) * vt.by_horizon[m - 2][y] : 0.0));
          best = std::max(best, s);
        }
        CHECK(std::abs(m * v - best) <= 1e-12 * m);
      }
    }
    // The argmax strategy attains v_n exactly in expectation.
    const auto sigma = vt.optimal_strategy();
    for (std::size_t x0 = 0; x0 < h.size(); ++x0) {
      const auto occ = occupation(h, x0, sigma, n);
      double total = 0.0;
      for (const auto& z : occ.stages) total += z.dot(h.payoffs());
      CHECK(std::abs(total / n - vt.values[x0]) <= 1e-12);
    }
  }
}

TEST_CASE("value_discounted examples") {
  const auto h = trap_house();
  const auto one = value_discounted(h, 1.0);
  for (std::size_t x = 0; x < h.size(); ++x) {
    double best = 0.0;
    for (std::size_t a = 0; a < h.menu_size(x); ++a) best = std::max(best, h.expected_payoff(x, a));
    CHECK(one.values[x] == doctest::Approx(best));
  }
  const auto abs = value_discounted(t::absorbing_house(.35), 0.01);
  CHECK(abs.values[0] == doctest::Approx(.35).epsilon(1e-10));
  CHECK(value_discounted(h, 0.01).values[2] == doctest::Approx(.2).epsilon(1e-10));
  const auto two = value_discounted(t::two_state_house(), 0.5);
  CHECK(two.values[0] == doctest::Approx(1.0));
  CHECK(two.values[1] == doctest::Approx(1.0));
  CHECK_THROWS_AS(value_discounted(h, 0.0), InvalidInput);
  CHECK_THROWS_AS(value_discounted(h, 1.5), InvalidInput);
}

TEST_CASE("occupation examples") {
  const auto abs = t::absorbing_house(.5);
  const auto o = occupation(abs, 0, Strategy::stationary_pure({0}), 5);
  for (const auto& z : o.stages) CHECK(z == ProbVector::dirac(1, 0));

  const auto two = occupation(t::two_state_house(), 0, Strategy::stationary_pure({1, 1}), 10);
  for (const auto& z : two.stages) CHECK(z == ProbVector::dirac(2, 1));

  const auto cyc = occupation(cycle_house(), 0, Strategy::stationary_pure({0, 0}), 10);
  CHECK(cyc.average.vector() == std::vector<double>{.5, .5});

  const auto hist = Strategy::history_rule(Randomization::pure, [](std::span<const std::size_t>) {
    return Decision::pure(0);
  });
  CHECK_THROWS_AS(occupation(cycle_house(), 0, hist, 3), InvalidInput);
}

TEST_CASE("solve_average_reward examples") {
  const auto abs = solve_average_reward(t::absorbing_house(.7));
  CHECK(abs.gain[0] == doctest::Approx(.7));
  CHECK(abs.choices == std::vector<std::size_t>{0});

  const auto two = solve_average_reward(t::two_state_house());
  CHECK(two.gain[0] == doctest::Approx(1.0));
  CHECK(two.gain[1] == doctest::Approx(1.0));
  CHECK(two.choices == std::vector<std::size_t>{1, 1});
  CHECK(two.policy.memory() == Memory::stationary);

  const auto trap = trap_house();
  const auto sol = solve_average_reward(trap);
  const auto oracle = t::best_stationary_gain(trap);
  for (std::size_t x = 0; x < 3; ++x) CHECK(sol.gain[x] == doctest::Approx(oracle[x]).epsilon(1e-12));
  CHECK(sol.gain[0] == doctest::Approx(2.0 / 3.0));
  CHECK(sol.gain[2] == doctest::Approx(.2));
  CHECK_FALSE(sol.fallback);
  for (const auto& p : sol.probes) CHECK(p.ok);
  CHECK(sol.optimality_residual <= 1e-9);
}

TEST_CASE("solve_average_reward matches exhaustive stationary enumeration") {
  t::Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 5), 3, 0.6);
    const auto sol = solve_average_reward(h);
    const auto oracle = t::best_stationary_gain(h);
    for (std::size_t x = 0; x < h.size(); ++x) {
      CHECK(std::abs(sol.gain[x] - oracle[x]) <= 1e-9);
      CHECK(sol.gain[x] >= -1e-12);
      CHECK(sol.gain[x] <= 1.0 + 1e-12);
    }
    CHECK(sol.optimality_residual <= 1e-9);
    CHECK_FALSE(sol.fallback);
    for (const auto& p : sol.probes) CHECK(p.ok);
    // The returned policy realizes the gain.
    const auto realized = t::stationary_gain(h, sol.choices);
    for (std::size_t x = 0; x < h.size(); ++x) CHECK(std::abs(realized[x] - sol.gain[x]) <= 1e-9);
  }
}

TEST_CASE("Fatou consistency and Cesaro bridge") {
  t::Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 1, 5), 3);
    const auto sol = solve_average_reward(h);
    const std::size_t nmax = 200;
    const auto vt = value_n(h, nmax);
    // Exact bound: n g <= n v_n + span(h) along the gain-optimal policy.
    const double sp = span(sol.bias);
    for (std::size_t n = 1; n <= nmax; ++n)
      for (std::size_t x = 0; x < h.size(); ++x)
        CHECK(sol.gain[x] <= vt.by_horizon[n - 1][x] + sp / n + 1e-9);
    for (std::size_t n : {50, 100, 200}) {
      const auto disc = value_discounted(h, 1.0 / static_cast<double>(n));
      for (std::size_t x = 0; x < h.size(); ++x)
        CHECK(std::abs(vt.by_horizon[n - 1][x] - disc.values[x]) <= 5.0 / n + 2 * sp / n);
    }
  }
  // Fixtures where the plain 2/n bound applies.
  for (const auto& h : {t::two_state_house(), trap_house(), cycle_house()}) {
    const auto sol = solve_average_reward(h);
    const auto vt = value_n(h, 100);
    for (std::size_t n = 1; n <= 100; ++n)
      for (std::size_t x = 0; x < h.size(); ++x) CHECK(sol.gain[x] <= vt.by_horizon[n - 1][x] + 2.0 / n);
  }
}

TEST_CASE("proxy value decreases in expectation along optimal play") {
  t::Rng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = t::random_house(rng, t::pick(rng, 2, 5), 3);
    const auto proxy = value_proxy(h);
    const double N = static_cast<double>(proxy.N);
    const std::size_t n = 64;
    const auto sigma = value_n(h, n).optimal_strategy();
    const auto occ = occupation(h, 0, sigma, n);
    for (std::size_t m = 1; m < n; ++m)
      CHECK(occ.stages[m].dot(proxy.v_N) <= occ.stages[m - 1].dot(proxy.v_N) + 2.0 / N + 2 * proxy.gap);
  }
}

TEST_CASE("value_proxy records its horizon") {
  const auto p = value_proxy(trap_house());
  CHECK(p.converged);
  CHECK(p.gap < 1e-4);
  CHECK(p.excess.size() == 2 * p.N);
  const std::size_t n0 = p.stabilization_horizon(0.05);
  for (std::size_t m = n0; m <= 2 * p.N; ++m) CHECK(p.excess[m - 1] <= 0.05);
}

TEST_CASE("check_lipschitz examples") {
  auto space = FiniteMetricSpace::line({0, .5, 1});
  const std::vector<ProbVector> menu{ProbVector({.2, .3, .5}), ProbVector::dirac(3, 0)};
  GamblingHouse same(space, {.1, .2, .3}, {menu, menu, menu});
  CHECK(check_lipschitz(same).ok());
  CHECK(check_lipschitz(t::two_state_house()).ok());

  FiniteMetricSpace broken_space({"a", "b", "x", "y"},
                                 {{0, 1, .5, .5}, {1, 0, .5, .5}, {.5, .5, 0, .1}, {.5, .5, .1, 0}});
  std::vector<std::vector<ProbVector>> menus{{ProbVector::dirac(4, 0)}, {ProbVector::dirac(4, 1)},
                                             {ProbVector::dirac(4, 0)}, {ProbVector::dirac(4, 1)}};
  const auto v = check_lipschitz(GamblingHouse(broken_space, {.5, .5, .5, .5}, menus));
  CHECK_FALSE(v.correspondence_ok);
  // First violation in scan order: delta_a from a has no partner in F(y) = {delta_b}
  // within d(a, y) = 0.5. The pair (x, y) at distance 0.1 fails the same way.
  CHECK(v.x == 0);
  CHECK(v.a == 0);
  CHECK(v.y == 3);
  CHECK(v.best_cost == doctest::Approx(1.0));
  CHECK(v.distance == doctest::Approx(0.5));
  CHECK_FALSE(v.message().empty());

  GamblingHouse steep(FiniteMetricSpace::line({0, .1}), {0.0, 1.0},
                      {{ProbVector::dirac(2, 0)}, {ProbVector::dirac(2, 0)}});
  const auto pv = check_lipschitz(steep);
  CHECK(pv.correspondence_ok);
  CHECK_FALSE(pv.payoff_ok);
}

TEST_CASE("check_value_lipschitz") {
  CHECK(check_value_lipschitz(t::absorbing_house(.3), 10).ok);
  const auto two = t::two_state_house();
  const auto g = solve_average_reward(two).gain;
  const auto v = check_value_lipschitz(two, 50, &g);
  CHECK(v.ok);
  CHECK(v.worst_slack == doctest::Approx(-1.0));

  t::Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const auto h = t::random_lipschitz_house(rng, t::pick(rng, 1, 6), 3);
    REQUIRE(check_lipschitz(h).ok());
    const auto gain = solve_average_reward(h).gain;
    const auto verdict = check_value_lipschitz(h, 60, &gain);
    CHECK(verdict.ok);
    CHECK(verdict.violations == 0);
  }
}
