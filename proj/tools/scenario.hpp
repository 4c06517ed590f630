#pragma once

// Scenario files (YAML):
//
//   name: gamma-storage            # optional
//   model:
//     family: gamma                # gamma | inverse_gaussian | stable |
//                                  # tempered_stable | compound_poisson_exp | degenerate
//     params: {a: 1, b: 1}
//     orientation: storage         # storage | inventory
//   method: both                   # analytic | mc | both
//   tolerance: 1.0e-6              # optional, analytic target accuracy
//   mc: {paths: 100000, step: 0.001, seed: 42}
//   output: {format: csv, path: results.csv}
//   queries:
//     - {kind: overflow_at_t, t: 1, u: [0.5, 1, 2]}
//     - {kind: overflow_by_t, t: [1, 2], u: 1, z: 0}
//     - {kind: prob_busy, t: 1}
//     - {kind: expected_tau, u: 1, z: 0}
//     - {kind: fp_transform, u: 1, z: 0, r: [0.5, 1, 2]}
//
// Grid fields take a number or a list; a query expands to the product of its
// grids in the order t, u, z, r.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "levystore/models.hpp"

namespace levystore::cli {

enum class QueryKind { OverflowAtT, OverflowByT, ProbBusy, ExpectedTau, FpTransform };
enum class Method { Analytic, Mc, Both };

inline const char* to_string(QueryKind k) {
  switch (k) {
    case QueryKind::OverflowAtT: return "overflow_at_t";
    case QueryKind::OverflowByT: return "overflow_by_t";
    case QueryKind::ProbBusy: return "prob_busy";
    case QueryKind::ExpectedTau: return "expected_tau";
    case QueryKind::FpTransform: return "fp_transform";
  }
  return "?";
}

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Analytic: return "analytic";
    case Method::Mc: return "mc";
    case Method::Both: return "both";
  }
  return "?";
}

struct Query {
  QueryKind kind;
  std::vector<double> t, u, z, r;
  int line = 0;
};

struct McSettings {
  std::size_t paths = 10000;
  double step = 1e-3;
  std::optional<std::uint64_t> seed;
};

struct OutputSettings {
  std::string format = "csv";
  std::string path;  // empty: standard output
};

struct Scenario {
  std::string name;
  LevyModel model = LevyModel::degenerate();
  Method method = Method::Analytic;
  std::optional<double> tolerance;
  McSettings mc;
  OutputSettings output;
  std::vector<Query> queries;

  bool uses_mc() const { return method != Method::Analytic; }
  bool uses_analytic() const { return method != Method::Mc; }
};

struct Diagnostic {
  std::string where;    // e.g. "queries[2].z"
  std::string message;
  int line = 0;         // 1-based, 0 if unknown
  int column = 0;
};

inline std::string format(const Diagnostic& d) {
  std::string s;
  if (d.line > 0) s += "line " + std::to_string(d.line) + ", column " + std::to_string(d.column) + ": ";
  if (!d.where.empty()) s += d.where + ": ";
  return s + d.message;
}

struct ParseOutcome {
  std::optional<Scenario> scenario;  // set only when there are no diagnostics
  std::vector<Diagnostic> diagnostics;
};

namespace detail {

class Parser {
 public:
  ParseOutcome run(const std::string& text) {
    ParseOutcome out;
    YAML::Node root;
    try {
      root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
      out.diagnostics.push_back({"", e.msg, e.mark.line + 1, e.mark.column + 1});
      return out;
    }
    if (!root.IsMap()) {
      add(root, "", "scenario must be a mapping with model, method and queries");
      out.diagnostics = std::move(diags_);
      return out;
    }
    Scenario s;
    check_keys(root, "", {"name", "model", "method", "tolerance", "mc", "output", "queries"});
    if (root["name"]) s.name = scalar(root["name"], "name");
    const bool model_ok = parse_model(root["model"], root, s);
    parse_method(root, s);
    if (root["tolerance"]) {
      if (auto v = number(root["tolerance"], "tolerance")) {
        if (!(*v > 0.0)) add(root["tolerance"], "tolerance", "must be > 0");
        s.tolerance = *v;
      }
    }
    parse_mc(root["mc"], s);
    parse_output(root["output"], s);
    parse_queries(root["queries"], root, s, model_ok);
    out.diagnostics = std::move(diags_);
    if (out.diagnostics.empty()) out.scenario = std::move(s);
    return out;
  }

 private:
  void add(const YAML::Node& n, std::string where, std::string msg) {
    int line = 0, col = 0;
    if (n.IsDefined() && n.Mark().line >= 0) {
      line = n.Mark().line + 1;
      col = n.Mark().column + 1;
    }
    diags_.push_back({std::move(where), std::move(msg), line, col});
  }

  void check_keys(const YAML::Node& map, const std::string& where,
                  const std::set<std::string>& allowed) {
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!allowed.count(key)) {
        std::string list;
        for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
        add(kv.first, where.empty() ? key : where + "." + key,
            "unknown key (expected one of: " + list + ")");
      }
    }
  }

  std::string scalar(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) {
      add(n, where, "expected a scalar value");
      return {};
    }
    return n.as<std::string>();
  }

  std::optional<double> number(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) {
      add(n, where, "expected a number");
      return std::nullopt;
    }
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) {
        add(n, where, "must be finite");
        return std::nullopt;
      }
      return v;
    } catch (const YAML::Exception&) {
      add(n, where, "expected a number (got '" + n.as<std::string>() + "')");
      return std::nullopt;
    }
  }

  std::optional<std::uint64_t> unsigned_integer(const YAML::Node& n, const std::string& where) {
    if (!n.IsScalar()) {
      add(n, where, "expected a nonnegative integer");
      return std::nullopt;
    }
    try {
      const auto text = n.as<std::string>();
      if (text.empty() || text[0] == '-') throw YAML::Exception(n.Mark(), "negative");
      return n.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      add(n, where, "expected a nonnegative integer (got '" + n.as<std::string>() + "')");
      return std::nullopt;
    }
  }

  bool parse_model(const YAML::Node& n, const YAML::Node& root, Scenario& s) {
    if (!n) {
      add(root, "model", "missing model section");
      return false;
    }
    if (!n.IsMap()) {
      add(n, "model", "expected a mapping with family, params and orientation");
      return false;
    }
    check_keys(n, "model", {"family", "params", "orientation"});
    Orientation o = Orientation::Storage;
    if (n["orientation"]) {
      const auto v = scalar(n["orientation"], "model.orientation");
      if (v == "storage") o = Orientation::Storage;
      else if (v == "inventory") o = Orientation::Inventory;
      else add(n["orientation"], "model.orientation", "must be storage or inventory (got '" + v + "')");
    }
    if (!n["family"]) {
      add(n, "model.family", "missing model family");
      return false;
    }
    const auto family = scalar(n["family"], "model.family");
    static const std::map<std::string, std::vector<std::string>> names = {
        {"gamma", {"a", "b"}},
        {"inverse_gaussian", {"delta", "gamma"}},
        {"stable", {"alpha", "sigma"}},
        {"tempered_stable", {"alpha", "sigma", "lambda"}},
        {"compound_poisson_exp", {"rate", "mean_jump"}},
        {"degenerate", {}}};
    const auto it = names.find(family);
    if (it == names.end()) {
      add(n["family"], "model.family",
          "unknown family '" + family +
              "' (expected gamma, inverse_gaussian, stable, tempered_stable, "
              "compound_poisson_exp or degenerate)");
      return false;
    }
    const YAML::Node params = n["params"];
    if (params && !params.IsMap()) {
      add(params, "model.params", "expected a mapping");
      return false;
    }
    std::map<std::string, double> p;
    bool ok = true;
    if (params) {
      check_keys(params, "model.params", std::set<std::string>(it->second.begin(), it->second.end()));
    }
    for (const auto& key : it->second) {
      if (!params || !params[key]) {
        add(params ? params : n, "model.params." + key, "missing parameter for family " + family);
        ok = false;
        continue;
      }
      if (auto v = number(params[key], "model.params." + key)) p[key] = *v;
      else ok = false;
    }
    if (!ok) return false;
    try {
      if (family == "gamma") s.model = LevyModel::gamma(p["a"], p["b"], o);
      else if (family == "inverse_gaussian") s.model = LevyModel::inverse_gaussian(p["delta"], p["gamma"], o);
      else if (family == "stable") s.model = LevyModel::stable(p["alpha"], p["sigma"], o);
      else if (family == "tempered_stable") {
        s.model = LevyModel::tempered_stable(p["alpha"], p["sigma"], p["lambda"], o);
      } else if (family == "compound_poisson_exp") {
        s.model = LevyModel::compound_poisson_exp(p["rate"], p["mean_jump"], o);
      } else {
        s.model = LevyModel::degenerate(o);
      }
    } catch (const InvalidParameter& e) {
      const YAML::Node at = params && params[e.parameter()] ? params[e.parameter()] : n;
      std::string msg = e.what();
      if (const auto prefix = e.parameter() + ": "; msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
      add(at, "model.params." + e.parameter(), msg);
      return false;
    }
    return true;
  }

  void parse_method(const YAML::Node& root, Scenario& s) {
    if (!root["method"]) {
      add(root, "method", "missing method (analytic, mc or both)");
      return;
    }
    const auto v = scalar(root["method"], "method");
    if (v == "analytic") s.method = Method::Analytic;
    else if (v == "mc") s.method = Method::Mc;
    else if (v == "both") s.method = Method::Both;
    else add(root["method"], "method", "must be analytic, mc or both (got '" + v + "')");
  }

  void parse_mc(const YAML::Node& n, Scenario& s) {
    if (!n) {
      if (s.uses_mc()) add(n, "mc.seed", "seed is mandatory when method uses Monte Carlo (reproducibility)");
      return;
    }
    if (!n.IsMap()) {
      add(n, "mc", "expected a mapping with paths, step and seed");
      return;
    }
    check_keys(n, "mc", {"paths", "step", "seed"});
    if (n["paths"]) {
      if (auto v = unsigned_integer(n["paths"], "mc.paths")) {
        if (*v < 1) add(n["paths"], "mc.paths", "need at least one path");
        s.mc.paths = static_cast<std::size_t>(*v);
      }
    }
    if (n["step"]) {
      if (auto v = number(n["step"], "mc.step")) {
        if (!(*v > 0.0)) add(n["step"], "mc.step", "must be > 0");
        s.mc.step = *v;
      }
    }
    if (n["seed"]) {
      s.mc.seed = unsigned_integer(n["seed"], "mc.seed");
    } else if (s.uses_mc()) {
      add(n, "mc.seed", "seed is mandatory when method uses Monte Carlo (reproducibility)");
    }
  }

  void parse_output(const YAML::Node& n, Scenario& s) {
    if (!n) return;
    if (!n.IsMap()) {
      add(n, "output", "expected a mapping with format and path");
      return;
    }
    check_keys(n, "output", {"format", "path"});
    if (n["format"]) {
      s.output.format = scalar(n["format"], "output.format");
      if (s.output.format != "csv" && s.output.format != "json") {
        add(n["format"], "output.format", "must be csv or json");
      }
    }
    if (n["path"]) s.output.path = scalar(n["path"], "output.path");
  }

  std::vector<double> grid(const YAML::Node& n, const std::string& where) {
    std::vector<double> g;
    if (n.IsSequence()) {
      if (n.size() == 0) add(n, where, "grid must not be empty");
      for (std::size_t i = 0; i < n.size(); ++i) {
        if (auto v = number(n[i], where + "[" + std::to_string(i) + "]")) g.push_back(*v);
      }
    } else if (auto v = number(n, where)) {
      g.push_back(*v);
    }
    return g;
  }

  void parse_queries(const YAML::Node& n, const YAML::Node& root, Scenario& s, bool model_ok) {
    if (!n) {
      add(root, "queries", "missing query list (use [] for none)");
      return;
    }
    if (!n.IsSequence()) {
      add(n, "queries", "expected a list of queries");
      return;
    }
    static const std::map<std::string, std::pair<QueryKind, std::set<std::string>>> kinds = {
        {"overflow_at_t", {QueryKind::OverflowAtT, {"t", "u"}}},
        {"overflow_by_t", {QueryKind::OverflowByT, {"t", "u", "z"}}},
        {"prob_busy", {QueryKind::ProbBusy, {"t"}}},
        {"expected_tau", {QueryKind::ExpectedTau, {"u", "z"}}},
        {"fp_transform", {QueryKind::FpTransform, {"u", "z", "r"}}}};
    for (std::size_t i = 0; i < n.size(); ++i) {
      const YAML::Node q = n[i];
      const std::string at = "queries[" + std::to_string(i) + "]";
      if (!q.IsMap() || !q["kind"]) {
        add(q, at, "each query needs a kind");
        continue;
      }
      const auto kind = scalar(q["kind"], at + ".kind");
      const auto it = kinds.find(kind);
      if (it == kinds.end()) {
        add(q["kind"], at + ".kind",
            "unknown kind '" + kind +
                "' (expected overflow_at_t, overflow_by_t, prob_busy, expected_tau or fp_transform)");
        continue;
      }
      const auto& fields = it->second.second;
      auto allowed = fields;
      allowed.insert("kind");
      check_keys(q, at, allowed);
      Query out;
      out.kind = it->second.first;
      out.line = q.Mark().line + 1;
      for (const auto& f : fields) {
        const bool optional_z = f == "z";
        if (!q[f]) {
          if (optional_z) {
            out.z = {0.0};
            continue;
          }
          add(q, at + "." + f, "missing grid '" + f + "' for " + kind);
          continue;
        }
        auto g = grid(q[f], at + "." + f);
        if (f == "t") out.t = std::move(g);
        else if (f == "u") out.u = std::move(g);
        else if (f == "z") out.z = std::move(g);
        else out.r = std::move(g);
      }
      check_query(q, at, out, s, model_ok);
      s.queries.push_back(std::move(out));
    }
  }

  void check_query(const YAML::Node& q, const std::string& at, const Query& out, const Scenario& s,
                   bool model_ok) {
    for (double t : out.t) {
      if (!(t > 0.0)) add(q["t"], at + ".t", "horizon t must be > 0 (got " + num(t) + ")");
      if (s.uses_mc() && t > 0.0) {
        const double k = t / s.mc.step;
        if (std::abs(k - std::round(k)) > 1e-9 * std::max(1.0, k)) {
          add(q["t"], at + ".t", "t = " + num(t) + " is not a multiple of mc.step = " + num(s.mc.step));
        }
      }
    }
    const bool u_may_be_zero = out.kind == QueryKind::OverflowAtT;
    for (double u : out.u) {
      if (u_may_be_zero ? !(u >= 0.0) : !(u > 0.0)) {
        add(q["u"], at + ".u",
            std::string("threshold u must be ") + (u_may_be_zero ? ">= 0" : "> 0") + " (got " + num(u) + ")");
      }
    }
    for (double z : out.z) {
      for (double u : out.u) {
        if (!(z >= 0.0 && z <= u)) {
          add(q["z"] ? q["z"] : q, at + ".z",
              "requires 0 <= z <= u (got z = " + num(z) + ", u = " + num(u) + ")");
        }
      }
    }
    for (double r : out.r) {
      if (!(r >= 0.0)) add(q["r"], at + ".r", "rate r must be >= 0 (got " + num(r) + ")");
    }
    if (!model_ok) return;
    const bool storage = s.model.orientation() == Orientation::Storage;
    if ((out.kind == QueryKind::ProbBusy) && !storage) {
      add(q["kind"], at + ".kind", "prob_busy is defined for the storage model");
    }
    if (out.kind == QueryKind::OverflowAtT && storage && s.uses_analytic() &&
        s.model.family() == Family::CompoundPoissonExp) {
      add(q["kind"], at + ".kind",
          "overflow_at_t is not available analytically for compound_poisson_exp (use method: mc)");
    }
  }

  static std::string num(double v) {
    std::ostringstream o;
    o << v;
    return o.str();
  }

  std::vector<Diagnostic> diags_;
};

}  // namespace detail

inline ParseOutcome parse_scenario(const std::string& text) { return detail::Parser().run(text); }

inline ParseOutcome load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ParseOutcome out;
    out.diagnostics.push_back({path, "cannot open scenario file"});
    return out;
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// Canonical YAML form of a parsed scenario.
inline std::string normalized(const Scenario& s) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  if (!s.name.empty()) e << YAML::Key << "name" << YAML::Value << s.name;
  e << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "family" << YAML::Value << to_string(s.model.family());
  e << YAML::Key << "params" << YAML::Value << YAML::Flow << YAML::BeginMap;
  for (const auto& [k, v] : s.model.named_parameters()) e << YAML::Key << k << YAML::Value << v;
  e << YAML::EndMap;
  e << YAML::Key << "orientation" << YAML::Value << to_string(s.model.orientation());
  e << YAML::EndMap;
  e << YAML::Key << "method" << YAML::Value << to_string(s.method);
  if (s.tolerance) e << YAML::Key << "tolerance" << YAML::Value << *s.tolerance;
  if (s.uses_mc()) {
    e << YAML::Key << "mc" << YAML::Value << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "paths" << YAML::Value << s.mc.paths;
    e << YAML::Key << "step" << YAML::Value << s.mc.step;
    e << YAML::Key << "seed" << YAML::Value << *s.mc.seed;
    e << YAML::EndMap;
  }
  e << YAML::Key << "output" << YAML::Value << YAML::Flow << YAML::BeginMap;
  e << YAML::Key << "format" << YAML::Value << s.output.format;
  if (!s.output.path.empty()) e << YAML::Key << "path" << YAML::Value << s.output.path;
  e << YAML::EndMap;
  e << YAML::Key << "queries" << YAML::Value << YAML::BeginSeq;
  for (const auto& q : s.queries) {
    e << YAML::Flow << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << to_string(q.kind);
    auto put = [&](const char* k, const std::vector<double>& g) {
      if (g.empty()) return;
      e << YAML::Key << k << YAML::Value << YAML::Flow << g;
    };
    put("t", q.t);
    put("u", q.u);
    put("z", q.z);
    put("r", q.r);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace levystore::cli
