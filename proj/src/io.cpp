#include "pathwise/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace pathwise {

using nlohmann::json;

const char* to_string(InstanceKind kind) {
  switch (kind) {
    case InstanceKind::house: return "house";
    case InstanceKind::mdp: return "mdp";
    case InstanceKind::pomdp: return "pomdp";
  }
  return "?";
}

namespace {

/// Rows already exact to 1e-12 are kept bit for bit so saved files
/// reload unchanged; larger round-off is divided out.
ProbVector as_law(std::vector<double> w, double sum) {
  if (std::abs(sum - 1.0) <= 1e-12) return ProbVector(std::move(w));
  return ProbVector::renormalized(std::move(w));
}

/// A JSON value together with its location, for diagnostics.
struct Node {
  const json& j;
  std::string path;

  [[noreturn]] void fail(const std::string& message) const { throw SchemaError(path, message); }

  bool has(const char* key) const { return j.is_object() && j.contains(key); }

  Node operator[](const char* key) const {
    if (!j.is_object()) fail("expected an object");
    if (!j.contains(key)) fail(std::string("missing field \"") + key + "\"");
    return {j.at(key), path + "." + key};
  }
  Node operator[](std::size_t i) const { return {j.at(i), path + "[" + std::to_string(i) + "]"}; }

  std::size_t array_size() const {
    if (!j.is_array()) fail("expected an array");
    return j.size();
  }
  std::size_t array_size(std::size_t expected, const char* what) const {
    const std::size_t n = array_size();
    if (n != expected)
      fail("expected " + std::to_string(expected) + " " + what + ", found " + std::to_string(n));
    return n;
  }
  double number() const {
    if (!j.is_number()) fail("expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) fail("number is not finite");
    return v;
  }
  double unit() const {
    const double v = number();
    if (v < 0.0 || v > 1.0) fail("value " + format_double(v) + " is outside [0, 1]");
    return v;
  }
  std::string string() const {
    if (!j.is_string()) fail("expected a string");
    return j.get<std::string>();
  }
  std::vector<std::string> strings() const {
    std::vector<std::string> out(array_size());
    if (out.empty()) fail("expected a non-empty array");
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = (*this)[i].string();
      for (std::size_t k = 0; k < i; ++k)
        if (out[k] == out[i]) (*this)[i].fail("duplicate label \"" + out[i] + "\"");
    }
    return out;
  }
  /// Dense row of n weights, or an object {label: weight}.
  ProbVector weights(const std::vector<std::string>& labels) const {
    const std::size_t n = labels.size();
    std::vector<double> w(n, 0.0);
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const Node entry{it.value(), path + "." + it.key()};
        std::size_t idx = n;
        for (std::size_t k = 0; k < n; ++k)
          if (labels[k] == it.key()) idx = k;
        if (idx == n) entry.fail("unknown label");
        w[idx] = entry.number();
      }
    } else {
      array_size(n, "weights");
      for (std::size_t k = 0; k < n; ++k) w[k] = (*this)[k].number();
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (w[k] < 0.0) fail("normalization error: weight " + std::to_string(k) + " is negative");
      sum += w[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) fail("normalization error: weights sum to " + format_double(sum));
    return as_law(std::move(w), sum);
  }
};

FiniteMetricSpace parse_space(const Node& body, const std::vector<std::string>& labels) {
  const std::size_t n = labels.size();
  if (body.has("metric")) {
    const Node m = body["metric"];
    const std::string type = m["type"].string();
    if (type == "discrete") {
      const double scale = m.has("scale") ? m["scale"].number() : 1.0;
      if (scale <= 0.0) m["scale"].fail("scale must be positive");
      auto d = FiniteMetricSpace::discrete(n, scale);
      return FiniteMetricSpace(labels, d.matrix());
    }
    if (type == "line") {
      const Node c = m["coords"];
      c.array_size(n, "coordinates");
      std::vector<double> coords(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = c[i].number();
      return FiniteMetricSpace(labels, FiniteMetricSpace::line(coords).matrix());
    }
    m["type"].fail("unknown metric type \"" + type + "\" (expected discrete or line)");
  }
  const Node d = body["distance"];
  d.array_size(n, "rows");
  Matrix dist(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    d[i].array_size(n, "columns");
    for (std::size_t k = 0; k < n; ++k) dist[i][k] = d[i][k].number();
  }
  const auto verdict = validate_space(labels, dist);
  if (!verdict.ok()) {
    const auto [a, b, c] = verdict.where;
    std::string where = d.path + "[" + std::to_string(a) + "][" + std::to_string(b) + "]";
    if (verdict.kind == SpaceVerdict::Kind::triangle)
      where = d.path + "[" + std::to_string(a) + "][" + std::to_string(c) + "]";
    throw SchemaError(where, verdict.message());
  }
  return FiniteMetricSpace(labels, std::move(dist));
}

GamblingHouse parse_house(const Node& body) {
  const auto labels = body["states"].strings();
  const std::size_t n = labels.size();
  auto space = parse_space(body, labels);
  const Node r = body["payoff"];
  r.array_size(n, "payoffs");
  std::vector<double> payoff(n);
  for (std::size_t x = 0; x < n; ++x) payoff[x] = r[x].unit();
  const Node m = body["menus"];
  m.array_size(n, "menus");
  std::vector<std::vector<ProbVector>> menus(n);
  for (std::size_t x = 0; x < n; ++x) {
    const std::size_t len = m[x].array_size();
    if (len == 0) m[x].fail("menu is empty");
    for (std::size_t a = 0; a < len; ++a) menus[x].push_back(m[x][a].weights(labels));
  }
  try {
    return GamblingHouse(std::move(space), std::move(payoff), std::move(menus));
  } catch (const InvalidInput& e) {
    body.fail(e.what());
  }
}

FiniteMDP parse_mdp(const Node& body, const LoadOptions& options) {
  const auto labels = body["states"].strings();
  const auto actions = body["actions"].strings();
  const std::size_t nk = labels.size(), ni = actions.size();
  auto space = parse_space(body, labels);
  const Node g = body["g"], q = body["q"];
  g.array_size(nk, "rows");
  q.array_size(nk, "rows");
  std::vector<std::vector<double>> gv(nk, std::vector<double>(ni));
  std::vector<std::vector<ProbVector>> qv(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    g[k].array_size(ni, "actions");
    q[k].array_size(ni, "actions");
    for (std::size_t i = 0; i < ni; ++i) {
      gv[k][i] = g[k][i].unit();
      qv[k].push_back(q[k][i].weights(labels));
    }
  }
  std::optional<FiniteMDP> mdp;
  try {
    mdp.emplace(std::move(space), actions, std::move(gv), std::move(qv));
  } catch (const InvalidInput& e) {
    body.fail(e.what());
  }
  if (options.require_mdp_lipschitz) {
    const auto v = check_mdp_lipschitz(*mdp);
    if (!v.transition_ok)
      throw SchemaError(q.path + "[" + std::to_string(v.k) + "][" + std::to_string(v.i) + "]",
                        "q-Lipschitz violation at (k, k', i) = (" + labels[v.k] + ", " + labels[v.kp] + ", " +
                            actions[v.i] + "): " + v.message());
  }
  return std::move(*mdp);
}

FinitePOMDP parse_pomdp(const Node& body) {
  const auto states = body["states"].strings();
  const auto actions = body["actions"].strings();
  const auto signals = body["signals"].strings();
  const std::size_t nk = states.size(), ni = actions.size(), ns = signals.size();
  const Node g = body["g"], q = body["q"];
  g.array_size(nk, "rows");
  q.array_size(nk, "rows");
  std::vector<std::vector<double>> gv(nk, std::vector<double>(ni));
  std::vector<std::vector<ProbVector>> qv(nk);
  for (std::size_t k = 0; k < nk; ++k) {
    g[k].array_size(ni, "actions");
    q[k].array_size(ni, "actions");
    for (std::size_t i = 0; i < ni; ++i) {
      gv[k][i] = g[k][i].unit();
      // q[k][i] is a |K| x |S| table over (k', s).
      const Node table = q[k][i];
      table.array_size(nk, "next-state rows");
      std::vector<double> w(nk * ns);
      double sum = 0.0;
      for (std::size_t kp = 0; kp < nk; ++kp) {
        table[kp].array_size(ns, "signals");
        for (std::size_t s = 0; s < ns; ++s) {
          const double v = table[kp][s].number();
          if (v < 0.0) table[kp][s].fail("normalization error: negative probability");
          w[kp * ns + s] = v;
          sum += v;
        }
      }
      if (std::abs(sum - 1.0) > 1e-9) table.fail("normalization error: weights sum to " + format_double(sum));
      qv[k].push_back(as_law(std::move(w), sum));
    }
  }
  try {
    return FinitePOMDP(states, actions, signals, std::move(gv), std::move(qv));
  } catch (const InvalidInput& e) {
    body.fail(e.what());
  }
}

json dense_matrix(const FiniteMetricSpace& space) {
  json rows = json::array();
  for (const auto& row : space.matrix()) rows.push_back(row);
  return rows;
}

}  // namespace

Instance parse_instance(const json& doc, const LoadOptions& options) {
  const Node root{doc, "$"};
  if (!doc.is_object()) root.fail("expected an object");
  if (!root.has("kind")) {
    if (root.has("menus")) return Instance{{}, parse_house(root)};
    root.fail("missing field \"kind\"");
  }
  InstanceMetadata meta;
  const std::string version = root["schema"].string();
  if (version != kInstanceSchema)
    root["schema"].fail("unsupported schema \"" + version + "\" (this build reads " + kInstanceSchema + ")");
  meta.version = version;
  if (root.has("metadata")) {
    const Node m = root["metadata"];
    if (m.has("name")) meta.name = m["name"].string();
    if (m.has("description")) meta.description = m["description"].string();
  }
  const std::string kind = root["kind"].string();
  const Node body = root["body"];
  if (kind == "house") return Instance{meta, parse_house(body)};
  if (kind == "mdp") return Instance{meta, parse_mdp(body, options)};
  if (kind == "pomdp") return Instance{meta, parse_pomdp(body)};
  root["kind"].fail("unknown kind \"" + kind + "\" (expected house, mdp or pomdp)");
}

Instance load_instance(const std::string& path, const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path + ": parse error: " + e.what());
  }
  return parse_instance(doc, options);
}

json instance_to_json(const Instance& instance) {
  json body;
  if (const auto* h = instance.house()) {
    body["states"] = h->space().labels();
    body["distance"] = dense_matrix(h->space());
    body["payoff"] = h->payoffs();
    json menus = json::array();
    for (const auto& menu : h->menus()) {
      json m = json::array();
      for (const auto& e : menu) m.push_back(e.vector());
      menus.push_back(m);
    }
    body["menus"] = menus;
  } else if (const auto* mdp = instance.mdp()) {
    body["states"] = mdp->states().labels();
    body["distance"] = dense_matrix(mdp->states());
    body["actions"] = mdp->actions();
    body["g"] = mdp->payoffs();
    json q = json::array();
    for (const auto& row : mdp->transitions()) {
      json r = json::array();
      for (const auto& e : row) r.push_back(e.vector());
      q.push_back(r);
    }
    body["q"] = q;
  } else {
    const auto& p = *instance.pomdp();
    body["states"] = p.states();
    body["actions"] = p.actions();
    body["signals"] = p.signals();
    body["g"] = p.payoffs();
    const std::size_t nk = p.num_states(), ns = p.num_signals();
    json q = json::array();
    for (std::size_t k = 0; k < nk; ++k) {
      json r = json::array();
      for (std::size_t i = 0; i < p.num_actions(); ++i) {
        json table = json::array();
        for (std::size_t kp = 0; kp < nk; ++kp) {
          json row = json::array();
          for (std::size_t s = 0; s < ns; ++s) row.push_back(p.q(k, i, kp, s));
          table.push_back(row);
        }
        r.push_back(table);
      }
      q.push_back(r);
    }
    body["q"] = q;
  }
  return json{{"schema", kInstanceSchema},
              {"kind", to_string(instance.kind())},
              {"metadata", {{"name", instance.metadata.name}, {"description", instance.metadata.description}}},
              {"body", body}};
}

void save_instance(const Instance& instance, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  out << instance_to_json(instance).dump(2) << "\n";
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, value >>= 4) out[static_cast<std::size_t>(i)] = digits[value & 0xf];
  return out;
}

std::string instance_hash(const Instance& instance) { return hex64(fnv1a(instance_to_json(instance).dump())); }

std::size_t resolve_label(const std::vector<std::string>& labels, const std::string& key, const std::string& what) {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == key) return i;
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), idx);
  if (ec == std::errc() && ptr == key.data() + key.size() && idx < labels.size()) return idx;
  throw InvalidInput("unknown " + what + " \"" + key + "\"");
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace pathwise
