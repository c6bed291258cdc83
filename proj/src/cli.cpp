#include "pathwise/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pathwise/invariant.hpp"
#include "pathwise/io.hpp"
#include "pathwise/mdp.hpp"
#include "pathwise/pomdp.hpp"
#include "pathwise/simulate.hpp"
#include "pathwise/synth.hpp"
#include "pathwise/value.hpp"

namespace pathwise {

using nlohmann::json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

struct Options {
  std::string instance, out, csv;
  std::string start, policy = "optimal", mu, nu, mu_state, nu_state, prior, steps, fixture, output, modulus;
  std::size_t horizon = 0, trials = 0, grid = 20, threads = 1, min_horizon = 1, plan_horizon = 50, trial = 0;
  double epsilon = 0.1, window = 0.1;
  std::optional<double> epsilon_prime;
  std::uint64_t seed = 1;
  bool no_simulate = false;
};

/// What a subcommand hands back for the report envelope.
struct Outcome {
  json model = json::object();
  json engine = json::object();
  json verdict = json::object();
  std::optional<bool> pass;
  std::string csv;
};

class Csv {
 public:
  void row(std::initializer_list<std::string> cells) { row(std::vector<std::string>(cells)); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os_ << ',';
      const auto& s = cells[c];
      if (s.find_first_of(",\"\n") == std::string::npos) {
        os_ << s;
      } else {
        os_ << '"';
        for (char ch : s) os_ << (ch == '"' ? "\"\"" : std::string(1, ch));
        os_ << '"';
      }
    }
    os_ << '\n';
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

std::string num(double v) { return format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

ProbVector parse_weights(const std::string& text, std::size_t n, const std::string& what) {
  const auto parts = split(text, ',');
  if (parts.size() != n)
    throw UsageError(what + " needs " + std::to_string(n) + " comma-separated weights, got " +
                     std::to_string(parts.size()));
  std::vector<double> w(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    try {
      std::size_t used = 0;
      w[i] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    } catch (const std::exception&) {
      throw UsageError(what + ": \"" + parts[i] + "\" is not a number");
    }
    if (!(w[i] >= 0.0)) throw UsageError(what + ": weights must be nonnegative");
    sum += w[i];
  }
  if (std::abs(sum - 1.0) > 1e-9) throw UsageError(what + ": weights sum to " + num(sum));
  return ProbVector::renormalized(std::move(w));
}

json sparse_law(const ProbVector& p, const std::vector<std::string>& labels) {
  json out = json::object();
  for (std::size_t x : p.support()) out[labels[x]] = p[x];
  return out;
}

json label_list(const std::vector<std::size_t>& idx, const std::vector<std::string>& labels) {
  json out = json::array();
  for (std::size_t x : idx) out.push_back(labels[x]);
  return out;
}

/// A house to work on: the instance itself, or the reduction of an MDP.
struct Target {
  GamblingHouse house;
  std::optional<MdpReduction> reduction;
  std::vector<std::string> start_labels;  // X, or K for MDPs

  std::size_t start(const std::string& key) const {
    const std::size_t i = resolve_label(start_labels, key, "start state");
    return reduction ? reduction->embed(i) : i;
  }
  std::vector<std::size_t> report_states() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < start_labels.size(); ++i) out.push_back(reduction ? reduction->embed(i) : i);
    return out;
  }
};

Target target_of(const Instance& inst, const std::string& command) {
  if (const auto* h = inst.house()) return {*h, std::nullopt, h->space().labels()};
  if (const auto* m = inst.mdp()) {
    auto red = mdp_to_house(*m);
    return {red.house, red, m->states().labels()};
  }
  throw UsageError(command + " needs a house or mdp instance; use pomdp-solve or pomdp-sim for POMDPs");
}

const FinitePOMDP& pomdp_of(const Instance& inst, const std::string& command) {
  if (const auto* p = inst.pomdp()) return *p;
  throw UsageError(command + " needs a pomdp instance");
}

ProbVector prior_of(const Options& o, const FinitePOMDP& p) {
  return o.prior.empty() ? ProbVector::uniform(p.num_states()) : parse_weights(o.prior, p.num_states(), "--prior");
}

std::optional<Modulus> parse_modulus(const std::string& spec) {
  if (spec.empty()) return std::nullopt;
  const auto parts = split(spec, ':');
  try {
    if (parts.size() == 2 && parts[0] == "linear") {
      const double c = std::stod(parts[1]);
      return Modulus([c](double d) { return c * d; });
    }
    if (parts.size() == 3 && parts[0] == "power") {
      const double c = std::stod(parts[1]), a = std::stod(parts[2]);
      return Modulus([c, a](double d) { return c * std::pow(d, a); });
    }
  } catch (const std::exception&) {
  }
  throw UsageError("--modulus expects linear:C or power:C:ALPHA");
}

// ---- subcommands -----------------------------------------------------------

Outcome cmd_values(const Options& o, const Instance& inst) {
  const auto t = target_of(inst, "values");
  if (o.horizon == 0) throw UsageError("--horizon must be positive");
  const auto vt = value_n(t.house, o.horizon);
  const auto states = t.report_states();
  Outcome r;
  r.model["horizon"] = o.horizon;
  r.model["states"] = t.start_labels;
  json vn = json::array(), first = json::array();
  for (std::size_t x : states) {
    vn.push_back(vt.values[x]);
    first.push_back(vt.argmax(o.horizon, x));
  }
  r.model["v_n"] = vn;
  r.model["first_choice"] = first;
  if (!o.start.empty()) r.model["v_n_start"] = vt.values[t.start(o.start)];
  r.engine["house_states"] = t.house.size();
  r.engine["reduced_from_mdp"] = t.reduction.has_value();
  Csv csv;
  std::vector<std::string> header{"n"};
  for (const auto& l : t.start_labels) header.push_back(l);
  csv.row(header);
  for (std::size_t n = 1; n <= o.horizon; ++n) {
    std::vector<std::string> row{num(n)};
    for (std::size_t x : states) row.push_back(num(vt.by_horizon[n - 1][x]));
    csv.row(row);
  }
  r.csv = csv.str();
  return r;
}

json certificate_model(const InvariantCertificate& c, const std::vector<std::string>& labels) {
  json selector = json::object();
  for (std::size_t x : c.support()) selector[labels[x]] = c.selector[x];
  return {{"mu_star", sparse_law(c.mu_star, labels)},
          {"support", label_list(c.support(), labels)},
          {"selector", selector},
          {"v_x0", c.v_x0()},
          {"kr_gap", c.kr_gap},
          {"shift_gap", c.shift_gap},
          {"payoff_gap", c.payoff_gap},
          {"value_gap", c.value_gap},
          {"source_horizon", c.source_horizon}};
}

json certificate_engine(const InvariantCertificate& c, const InvariantOptions& opt) {
  return {{"doublings", c.doublings},
          {"tv_gap", c.tv_gap},
          {"invariance_residual", c.invariance_residual},
          {"full_support_retry", c.full_support_retry},
          {"diameter", c.diameter},
          {"proxy_N", c.proxy.N},
          {"proxy_gap", c.proxy.gap},
          {"proxy_converged", c.proxy.converged},
          {"payoff_tolerance", opt.payoff_tolerance},
          {"max_horizon", opt.max_horizon}};
}

Outcome cmd_invariant(const Options& o, const Instance& inst) {
  const auto t = target_of(inst, "invariant");
  const std::size_t x0 = t.start(o.start);
  const InvariantOptions opt;
  const auto c = find_invariant(t.house, x0, o.epsilon, std::max<std::size_t>(1, o.min_horizon), opt);
  const auto& labels = t.house.space().labels();
  Outcome r;
  r.model = certificate_model(c, labels);
  r.model["start"] = labels[x0];
  r.model["epsilon"] = o.epsilon;
  r.engine = certificate_engine(c, opt);
  const bool fixed = c.invariance_residual <= 1e-9, close = c.kr_gap <= o.epsilon;
  r.verdict = {{"invariance_within_1e-9", fixed}, {"kr_gap_within_epsilon", close}};
  r.pass = fixed && close;
  Csv csv;
  csv.row({"state", "label", "mu_star", "v_N"});
  for (std::size_t x = 0; x < t.house.size(); ++x)
    csv.row({num(x), labels[x], num(c.mu_star[x]), num(c.proxy.v_N[x])});
  r.csv = csv.str();
  return r;
}

json gamma_json(const GammaEstimate& g) {
  return {{"horizon", g.horizon}, {"trials", g.trials},       {"window_start", g.window_start},
          {"mean", g.mean},       {"se", g.se},               {"ci_low", g.ci_low},
          {"ci_high", g.ci_high}, {"final_mean", g.final_mean}, {"final_se", g.final_se}};
}

Outcome cmd_synthesize(const Options& o, const Instance& inst) {
  const auto t = target_of(inst, "synthesize");
  const std::size_t x0 = t.start(o.start);
  SynthesisParams p;
  p.epsilon = o.epsilon;
  p.epsilon_prime = o.epsilon_prime;
  p.modulus = parse_modulus(o.modulus);
  p.horizon = o.horizon;
  p.trials = o.trials;
  p.seed = o.seed;
  p.gamma.threads = o.threads;
  p.gamma.window_start_fraction = o.window;
  p.simulate = !o.no_simulate;
  const auto rep = synthesize(t.house, x0, p);
  const auto& labels = t.house.space().labels();
  Outcome r;
  r.model = {{"start", labels[x0]},
             {"epsilon", rep.epsilon},
             {"epsilon_prime", rep.epsilon_prime},
             {"n0", rep.n0},
             {"n1", rep.n1},
             {"n2", rep.n2},
             {"n3", rep.n3},
             {"set_B", label_list(rep.set_B, labels)},
             {"set_A", label_list(rep.set_A, labels)},
             {"z_n3_outside_A", rep.z_n3_outside_A},
             {"pre_switch_value", rep.pre_switch_value},
             {"v_estimate", rep.v_estimate},
             {"gain_x0", rep.average_reward.gain[x0]},
             {"predicted_gamma_inf", rep.predicted_gamma_inf},
             {"strategy", rep.strategy.describe()},
             {"certificate", certificate_model(rep.certificate, labels)}};
  if (rep.gamma) r.model["gamma_inf_estimate"] = gamma_json(*rep.gamma);
  r.engine = {{"lipschitz", rep.lipschitz},
              {"eta_3eps", rep.eta_3eps},
              {"certificate", certificate_engine(rep.certificate, p.invariant)},
              {"policy_iterations", rep.average_reward.iterations},
              {"optimality_residual", rep.average_reward.optimality_residual},
              {"average_reward_fallback", rep.average_reward.fallback},
              {"window_start_fraction", o.window},
              {"threads", o.threads}};
  r.verdict = {{"structure", rep.structure_ok()}, {"pre_switch", rep.pre_switch_ok()}};
  bool pass = rep.structure_ok() && rep.pre_switch_ok();
  if (rep.gamma) {
    r.verdict["end_to_end"] = rep.end_to_end_ok();
    r.verdict["gain_oracle"] = rep.gain_oracle_ok();
    pass = pass && rep.end_to_end_ok() && rep.gain_oracle_ok();
    Csv csv;
    csv.row({"trial", "liminf_proxy"});
    for (std::size_t k = 0; k < rep.gamma->minima.size(); ++k) csv.row({num(k), num(rep.gamma->minima[k])});
    r.csv = csv.str();
  }
  r.pass = pass;
  return r;
}

Strategy named_policy(const std::string& policy, const GamblingHouse& house, std::size_t plan_horizon) {
  if (policy == "optimal") return value_n(house, plan_horizon, false).optimal_strategy();
  if (policy == "first") return Strategy::stationary_pure(std::vector<std::size_t>(house.size(), 0));
  if (policy == "uniform") {
    std::vector<std::vector<double>> w(house.size());
    for (std::size_t x = 0; x < house.size(); ++x)
      w[x].assign(house.menu_size(x), 1.0 / static_cast<double>(house.menu_size(x)));
    return Strategy::stationary_behavior(std::move(w));
  }
  if (policy == "gain") return solve_average_reward(house).policy;
  throw UsageError("unknown --policy \"" + policy + "\" (expected optimal, gain, first or uniform)");
}

Outcome cmd_simulate(const Options& o, const Instance& inst) {
  const auto t = target_of(inst, "simulate");
  const std::size_t x0 = t.start(o.start);
  if (o.horizon == 0) throw UsageError("--horizon must be positive");
  const auto sigma = named_policy(o.policy, t.house, o.policy == "optimal" ? o.horizon : 1);
  const auto& labels = t.house.space().labels();
  Outcome r;
  Csv csv;
  csv.row({"trial", "m", "state", "payoff", "running_average"});
  json finals = json::array();
  double sum = 0.0;
  for (std::size_t k = 0; k < std::max<std::size_t>(1, o.trials); ++k) {
    const auto tr = simulate(t.house, x0, sigma, o.horizon, o.seed, o.trial + k);
    for (std::size_t m = 1; m <= o.horizon; ++m)
      csv.row({num(o.trial + k), num(m), labels[tr.states[m]], num(tr.payoffs[m - 1]), num(tr.running_averages[m - 1])});
    finals.push_back(tr.running_averages.back());
    sum += tr.running_averages.back();
  }
  r.model = {{"start", labels[x0]},
             {"horizon", o.horizon},
             {"policy", o.policy},
             {"strategy", sigma.describe()},
             {"final_running_averages", finals},
             {"mean_final_running_average", sum / static_cast<double>(finals.size())}};
  if (o.policy == "optimal") r.model["v_n_start"] = value_n(t.house, o.horizon, false).values[x0];
  r.engine = {{"first_trial", o.trial}, {"trials", finals.size()}};
  r.csv = csv.str();
  return r;
}

Outcome cmd_kr(const Options& o, const Instance& inst) {
  const auto t = target_of(inst, "kr");
  const auto& space = inst.mdp() ? inst.mdp()->states() : t.house.space();
  const std::size_t n = space.size();
  auto law = [&](const std::string& w, const std::string& state, const char* flag) {
    if (!state.empty()) return ProbVector::dirac(n, resolve_label(space.labels(), state, "state"));
    if (w.empty()) throw UsageError(std::string("give --") + flag + " or --" + flag + "-state");
    return parse_weights(w, n, std::string("--") + flag);
  };
  const auto mu = law(o.mu, o.mu_state, "mu"), nu = law(o.nu, o.nu_state, "nu");
  const auto primal = kr_distance(space, mu, nu);
  const auto dual = kr_dual(space, mu, nu);
  Outcome r;
  r.model = {{"distance", primal.distance}, {"dual_distance", dual.distance}, {"potential", dual.potential.values}};
  json flows = json::array();
  Csv csv;
  csv.row({"source", "target", "mass"});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (primal.coupling(i, j) > 0.0) {
        flows.push_back({{"source", space.label(i)}, {"target", space.label(j)}, {"mass", primal.coupling(i, j)}});
        csv.row({space.label(i), space.label(j), num(primal.coupling(i, j))});
      }
  r.model["coupling"] = flows;
  const double gap = std::abs(primal.distance - dual.distance);
  r.engine = {{"duality_gap", gap}, {"duality_tolerance", 1e-9}};
  r.verdict = {{"duality", gap <= 1e-9}};
  r.pass = gap <= 1e-9;
  r.csv = csv.str();
  return r;
}

Outcome cmd_reduce(const Options& o, const Instance& inst) {
  if (!inst.mdp()) throw UsageError("reduce needs an mdp instance");
  const auto& mdp = *inst.mdp();
  const auto red = mdp_to_house(mdp);
  Outcome r;
  r.model = {{"states", red.house.size()}, {"menu_size", red.house.max_menu_size()}};
  json embed = json::object();
  for (std::size_t k = 0; k < mdp.num_states(); ++k) embed[mdp.states().label(k)] = red.house.space().label(red.embed(k));
  r.model["embedding"] = embed;
  const auto lip = check_mdp_lipschitz(mdp);
  r.engine = {{"transition_lipschitz", lip.transition_ok}, {"payoff_lipschitz", lip.payoff_ok}};
  if (!o.output.empty()) {
    Instance out{{inst.metadata.name + "-reduced", "house reduction of " + inst.metadata.name, kInstanceSchema},
                 red.house};
    save_instance(out, o.output);
    r.engine["written"] = o.output;
  }
  Csv csv;
  csv.row({"state", "label", "previous", "action", "current", "payoff"});
  for (std::size_t x = 0; x < red.house.size(); ++x)
    csv.row({num(x), red.house.space().label(x), mdp.states().label(red.previous(x)), mdp.actions()[red.action(x)],
             mdp.states().label(red.current(x)), num(red.house.payoff(x))});
  r.csv = csv.str();
  return r;
}

Outcome cmd_belief(const Options& o, const Instance& inst) {
  const auto& p = pomdp_of(inst, "belief");
  ProbVector b = prior_of(o, p);
  Outcome r;
  json steps = json::array();
  Csv csv;
  std::vector<std::string> header{"step", "action", "signal", "signal_probability"};
  for (const auto& k : p.states()) header.push_back("p_" + k);
  csv.row(header);
  auto belief_row = [&](std::size_t step, const std::string& a, const std::string& s, const std::string& prob) {
    std::vector<std::string> row{num(step), a, s, prob};
    for (double w : b.weights()) row.push_back(num(w));
    csv.row(row);
  };
  belief_row(0, "", "", "");
  bool possible = true;
  std::size_t step = 0;
  for (const auto& pair : o.steps.empty() ? std::vector<std::string>{} : split(o.steps, ',')) {
    const auto parts = split(pair, ':');
    if (parts.size() != 2) throw UsageError("--steps expects action:signal pairs");
    const std::size_t i = resolve_label(p.actions(), parts[0], "action");
    const std::size_t s = resolve_label(p.signals(), parts[1], "signal");
    ++step;
    try {
      const auto up = belief_update(p, b, i, s);
      b = up.posterior;
      steps.push_back({{"action", p.actions()[i]}, {"signal", p.signals()[s]},
                       {"signal_probability", up.signal_probability}, {"posterior", b.vector()}});
      belief_row(step, p.actions()[i], p.signals()[s], num(up.signal_probability));
    } catch (const ImpossibleObservation& e) {
      steps.push_back({{"action", p.actions()[i]}, {"signal", p.signals()[s]}, {"error", e.what()}});
      possible = false;
      break;
    }
  }
  r.model = {{"prior", prior_of(o, p).vector()}, {"steps", steps}, {"posterior", b.vector()}};
  r.engine = {{"impossible_threshold", 1e-15}};
  r.verdict = {{"observations_possible", possible}};
  r.pass = possible;
  r.csv = csv.str();
  return r;
}

Outcome cmd_pomdp_solve(const Options& o, const Instance& inst) {
  const auto& p = pomdp_of(inst, "pomdp-solve");
  if (o.horizon == 0) throw UsageError("--horizon must be positive");
  const BeliefGrid grid(p.num_states(), o.grid);
  const auto bh = pomdp_to_house(p, grid);
  const auto vt = value_n(bh.house, o.horizon);
  // Lip1 across grid nodes, up to the discretization slack.
  double worst = -1e300;
  for (std::size_t n = 1; n <= o.horizon; ++n)
    for (std::size_t a = 0; a < grid.size(); ++a)
      for (std::size_t b = a + 1; b < grid.size(); ++b)
        worst = std::max(worst, std::abs(vt.by_horizon[n - 1][bh.node_state[a]] -
                                         vt.by_horizon[n - 1][bh.node_state[b]]) -
                                    grid.l1(a, b));
  const double slack = 2.0 * grid.error_bound();
  const auto p1 = prior_of(o, p);
  Outcome r;
  r.model = {{"horizon", o.horizon},
             {"prior", p1.vector()},
             {"prior_node", grid.node(grid.project(p1)).vector()},
             {"v_n_prior", vt.values[bh.embed(p1)]},
             {"lipschitz_worst_excess", std::max(0.0, worst)}};
  r.engine = {{"grid_resolution", o.grid},
              {"grid_nodes", grid.size()},
              {"house_states", bh.house.size()},
              {"projection_error_bound", grid.error_bound()},
              {"lipschitz_slack", slack}};
  r.verdict = {{"lipschitz_within_slack", worst <= slack + 1e-12}};
  r.pass = worst <= slack + 1e-12;
  Csv csv;
  std::vector<std::string> header{"node"};
  for (const auto& k : p.states()) header.push_back("p_" + k);
  header.push_back("v_n");
  csv.row(header);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    std::vector<std::string> row{num(j)};
    for (double w : grid.node(j).weights()) row.push_back(num(w));
    row.push_back(num(vt.values[bh.node_state[j]]));
    csv.row(row);
  }
  r.csv = csv.str();
  return r;
}

Outcome cmd_pomdp_sim(const Options& o, const Instance& inst) {
  const auto& p = pomdp_of(inst, "pomdp-sim");
  if (o.horizon == 0) throw UsageError("--horizon must be positive");
  const BeliefGrid grid(p.num_states(), o.grid);
  const auto bh = pomdp_to_house(p, grid);
  const auto p1 = prior_of(o, p);
  Strategy sigma = Strategy::stationary_pure({});
  Outcome r;
  if (o.policy == "optimal") {
    sigma = value_n(bh.house, o.plan_horizon, false).optimal_strategy();
  } else if (o.policy == "synthesize") {
    SynthesisParams sp;
    sp.epsilon = o.epsilon;
    sp.simulate = false;
    sp.modulus = parse_modulus(o.modulus.empty() ? "linear:1" : o.modulus);
    const auto rep = synthesize(bh.house, bh.embed(p1), sp);
    sigma = rep.strategy;
    r.engine["synthesis"] = {{"n3", rep.n3}, {"v_estimate", rep.v_estimate}, {"predicted_gamma_inf", rep.predicted_gamma_inf}};
  } else {
    throw UsageError("unknown --policy \"" + o.policy + "\" (expected optimal or synthesize)");
  }
  Csv csv;
  csv.row({"m", "state", "action", "signal", "realized", "expected"});
  const std::size_t trials = std::max<std::size_t>(1, o.trials);
  double sum_r = 0.0, sum_e = 0.0, sq = 0.0;
  std::size_t anchors = 0;
  for (std::size_t k = 0; k < trials; ++k) {
    HouseController ctl(bh, sigma);
    const auto tr = pomdp_simulate(p, p1, ctl, o.horizon, o.seed, k);
    sum_r += tr.realized_average.back();
    sum_e += tr.expected_average.back();
    sq += tr.realized_average.back() * tr.realized_average.back();
    anchors += ctl.re_anchors();
    if (k == 0)
      for (std::size_t m = 0; m < o.horizon; ++m)
        csv.row({num(m + 1), p.states()[tr.states[m]], p.actions()[tr.actions[m]], p.signals()[tr.signals[m]],
                 num(tr.realized[m]), num(tr.expected[m])});
  }
  const double n = static_cast<double>(trials), mean = sum_r / n;
  r.model = {{"horizon", o.horizon},
             {"trials", trials},
             {"policy", o.policy},
             {"realized_mean", mean},
             {"realized_se", trials > 1 ? std::sqrt(std::max(0.0, sq / n - mean * mean) / (n - 1)) : 0.0},
             {"expected_mean", sum_e / n}};
  r.engine["grid_resolution"] = o.grid;
  r.engine["grid_nodes"] = grid.size();
  r.engine["re_anchors"] = anchors;
  r.csv = csv.str();
  return r;
}

Outcome cmd_example(const Options& o) {
  if (!(o.epsilon > 0.0 && o.epsilon <= 1.0)) throw UsageError("--epsilon must lie in (0, 1]");
  const auto ex = make_example_strategy(o.epsilon);
  Outcome r;
  r.model = {{"epsilon", o.epsilon},
             {"switch_stages", ex.switch_stages},
             {"switch_weights", {o.epsilon / 2, 1 - o.epsilon / 2}},
             {"between_switches", "stay"},
             {"strategy", ex.strategy.describe()}};
  if (!o.fixture.empty()) {
    save_instance(Instance{{"example", "two-state example house", kInstanceSchema}, ex.house}, o.fixture);
    r.engine["fixture"] = o.fixture;
  }
  if (o.trials > 0) {
    const std::size_t T = o.horizon ? o.horizon : 256;
    const auto g = estimate_gamma_inf(ex.house, 0, ex.strategy, T, o.trials, o.seed,
                                      {.window_start_fraction = 0.0, .threads = o.threads});
    double hits = 0.0;
    for (double m : g.minima) hits += m <= o.epsilon;
    r.model["gamma_n"] = g.final_mean;
    r.model["gamma_n_se"] = g.final_se;
    r.model["liminf_proxy"] = gamma_json(g);
    r.model["fraction_min_below_epsilon"] = hits / static_cast<double>(o.trials);
  }
  Csv csv;
  csv.row({"stage", "weight_x", "weight_x*"});
  for (std::size_t s : ex.switch_stages) csv.row({num(s), num(o.epsilon / 2), num(1 - o.epsilon / 2)});
  r.csv = csv.str();
  return r;
}

Outcome cmd_check(const Options& o, const Instance& inst) {
  Outcome r;
  if (const auto* h = inst.house()) {
    const auto lip = check_lipschitz(*h);
    r.model["correspondence_lipschitz"] = lip.correspondence_ok;
    r.model["payoff_lipschitz"] = lip.payoff_ok;
    if (!lip.ok()) r.model["violation"] = lip.message();
    bool pass = lip.ok();
    if (lip.ok()) {
      const auto ar = solve_average_reward(*h);
      const auto vl = check_value_lipschitz(*h, o.horizon, &ar.gain);
      r.model["value_lipschitz"] = vl.ok;
      r.model["gain_lipschitz"] = vl.gain_ok;
      r.model["worst_slack"] = vl.worst_slack;
      r.engine["violations"] = vl.violations;
      pass = vl.ok && vl.gain_ok;
    }
    r.engine["horizon"] = o.horizon;
    r.verdict = {{"lipschitz", pass}};
    r.pass = pass;
  } else if (const auto* m = inst.mdp()) {
    const auto lip = check_mdp_lipschitz(*m);
    r.model["transition_lipschitz"] = lip.transition_ok;
    r.model["payoff_lipschitz"] = lip.payoff_ok;
    if (!lip.ok()) r.model["violation"] = lip.message();
    r.verdict = {{"lipschitz", lip.ok()}};
    r.pass = lip.ok();
  } else {
    const auto& p = *inst.pomdp();
    r.model = {{"states", p.num_states()}, {"actions", p.num_actions()}, {"signals", p.num_signals()}};
    r.verdict = {{"valid", true}};
    r.pass = true;
  }
  return r;
}

// ---- plumbing --------------------------------------------------------------

json recorded_flags(const CLI::App& sub) {
  json flags = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_name();
    if (name == "--help" || name == "-h") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
      flags[name] = opt->get_type_size() == 0 && joined.empty() ? "true" : joined;
    } else {
      flags[name] = opt->get_default_str();
    }
  }
  return flags;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path);
  f << text;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"Pathwise uniform value toolkit", "pathwise"};
  app.require_subcommand(1);
  std::map<std::string, Options> opts;
  std::map<std::string, bool> uses_instance;

  auto sub = [&](const std::string& name, const std::string& desc, bool instance) {
    CLI::App* s = app.add_subcommand(name, desc);
    s->option_defaults()->always_capture_default();
    Options& o = opts[name];
    uses_instance[name] = instance;
    if (instance) s->add_option("--instance", o.instance, "instance JSON file")->required();
    s->add_option("--out", o.out, "report JSON path (stdout when absent)");
    s->add_option("--csv", o.csv, "CSV output path");
    return std::pair<CLI::App*, Options*>{s, &o};
  };

  {
    auto [s, o] = sub("values", "n-stage values v_1..v_n", true);
    o->horizon = 50;
    s->add_option("--horizon", o->horizon, "n");
    s->add_option("--start", o->start, "state whose value is reported");
  }
  {
    auto [s, o] = sub("invariant", "invariant-measure certificate", true);
    o->epsilon = 1e-2;
    s->add_option("--start", o->start, "initial state")->required();
    s->add_option("--epsilon", o->epsilon, "KR tolerance");
    s->add_option("--min-horizon", o->min_horizon, "first n tried");
  }
  {
    auto [s, o] = sub("synthesize", "pathwise epsilon-optimal strategy", true);
    o->horizon = 100000;
    o->trials = 500;
    s->add_option("--start", o->start, "initial state")->required();
    s->add_option("--epsilon", o->epsilon, "target accuracy");
    s->add_option("--epsilon-prime", o->epsilon_prime, "invariant tolerance (default epsilon^3)");
    s->add_option("--modulus", o->modulus, "linear:C or power:C:ALPHA for non-Lipschitz houses");
    s->add_option("--horizon", o->horizon, "simulation horizon T");
    auto* trials = s->add_option("--trials", o->trials, "Monte Carlo trials");
    s->add_option("--seed", o->seed, "master seed");
    s->add_option("--threads", o->threads, "worker threads (results do not depend on it)");
    s->add_option("--window", o->window, "liminf window start as a fraction of T");
    s->add_flag("--no-simulate", o->no_simulate, "skip the Monte Carlo estimate")->excludes(trials);
  }
  {
    auto [s, o] = sub("simulate", "seeded trajectories", true);
    o->horizon = 1000;
    o->trials = 1;
    s->add_option("--start", o->start, "initial state")->required();
    s->add_option("--horizon", o->horizon, "T");
    s->add_option("--trials", o->trials, "number of trajectories");
    s->add_option("--trial", o->trial, "first trial counter");
    s->add_option("--seed", o->seed, "master seed");
    s->add_option("--policy", o->policy, "optimal, gain, first or uniform");
  }
  {
    auto [s, o] = sub("kr", "Kantorovich-Rubinstein distance on the instance metric", true);
    auto* mu = s->add_option("--mu", o->mu, "weights, comma separated");
    auto* mus = s->add_option("--mu-state", o->mu_state, "Dirac law at a state");
    auto* nu = s->add_option("--nu", o->nu, "weights, comma separated");
    auto* nus = s->add_option("--nu-state", o->nu_state, "Dirac law at a state");
    mu->excludes(mus);
    nu->excludes(nus);
  }
  {
    auto [s, o] = sub("reduce", "MDP to gambling house", true);
    s->add_option("--output", o->output, "write the reduced house instance here");
  }
  {
    auto [s, o] = sub("belief", "Bayes filter along action:signal steps", true);
    s->add_option("--prior", o->prior, "initial belief (uniform when absent)");
    s->add_option("--steps", o->steps, "comma-separated action:signal pairs");
  }
  {
    auto [s, o] = sub("pomdp-solve", "grid belief-house values", true);
    o->horizon = 50;
    s->add_option("--grid", o->grid, "grid resolution D");
    s->add_option("--horizon", o->horizon, "n");
    s->add_option("--prior", o->prior, "initial belief (uniform when absent)");
  }
  {
    auto [s, o] = sub("pomdp-sim", "play a belief-house strategy on the POMDP", true);
    o->horizon = 1000;
    o->trials = 100;
    s->add_option("--grid", o->grid, "grid resolution D");
    s->add_option("--prior", o->prior, "initial belief (uniform when absent)");
    s->add_option("--horizon", o->horizon, "T");
    s->add_option("--trials", o->trials, "number of runs");
    s->add_option("--seed", o->seed, "master seed");
    s->add_option("--policy", o->policy, "optimal or synthesize");
    s->add_option("--plan-horizon", o->plan_horizon, "n for the optimal policy");
    s->add_option("--epsilon", o->epsilon, "accuracy for synthesize");
    s->add_option("--modulus", o->modulus, "modulus for synthesize (default linear:1)");
  }
  {
    auto [s, o] = sub("example", "two-state example strategy", false);
    o->epsilon = 0.5;
    s->add_option("--epsilon", o->epsilon, "epsilon");
    s->add_option("--fixture", o->fixture, "write the example house instance here");
    s->add_option("--trials", o->trials, "Monte Carlo trials (0 skips simulation)");
    s->add_option("--horizon", o->horizon, "simulation horizon (default 256)");
    s->add_option("--seed", o->seed, "master seed");
    s->add_option("--threads", o->threads, "worker threads");
  }
  {
    auto [s, o] = sub("check", "Lipschitz and validity checks", true);
    o->horizon = 200;
    s->add_option("--horizon", o->horizon, "n_max for the value check");
  }

  if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !opts.count(args[0])) {
    err << "usage error: unknown subcommand \"" << args[0] << "\"\n";
    return 2;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  const std::string name = chosen->get_name();
  const Options& o = opts.at(name);

  std::optional<Instance> inst;
  Outcome outcome;
  try {
    try {
      if (uses_instance[name]) inst = load_instance(o.instance);
    } catch (const InvalidInput& e) {
      err << "invalid instance: " << e.what() << "\n";
      return 2;
    }
    if (name == "values") outcome = cmd_values(o, *inst);
    else if (name == "invariant") outcome = cmd_invariant(o, *inst);
    else if (name == "synthesize") outcome = cmd_synthesize(o, *inst);
    else if (name == "simulate") outcome = cmd_simulate(o, *inst);
    else if (name == "kr") outcome = cmd_kr(o, *inst);
    else if (name == "reduce") outcome = cmd_reduce(o, *inst);
    else if (name == "belief") outcome = cmd_belief(o, *inst);
    else if (name == "pomdp-solve") outcome = cmd_pomdp_solve(o, *inst);
    else if (name == "pomdp-sim") outcome = cmd_pomdp_sim(o, *inst);
    else if (name == "example") outcome = cmd_example(o);
    else if (name == "check") outcome = cmd_check(o, *inst);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  json manifest = {{"command", name},
                   {"flags", recorded_flags(*chosen)},
                   {"seed", o.seed},
                   {"tool_version", kToolVersion},
                   {"instance_hash", inst ? json(instance_hash(*inst)) : json(nullptr)},
                   {"instance_kind", inst ? json(to_string(inst->kind())) : json(nullptr)}};
  if (outcome.pass) outcome.verdict["pass"] = *outcome.pass;
  json report = {{"manifest", manifest},
                 {"model_quantities", outcome.model},
                 {"engine_quantities", outcome.engine},
                 {"verdict", outcome.verdict}};
  report["report_hash"] = hex64(fnv1a(report.dump()));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  report["timing"] = {{"wall_seconds", seconds}};

  try {
    const std::string text = report.dump(2) + "\n";
    if (o.out.empty())
      out << text;
    else
      write_file(o.out, text);
    if (!o.csv.empty()) write_file(o.csv, outcome.csv);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }
  if (outcome.pass && !*outcome.pass) {
    err << name << ": verdict failed\n";
    return 1;
  }
  return 0;
}

}  // namespace pathwise
