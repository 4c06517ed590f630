#pragma once

// Executes a parsed scenario: one row per (query, grid point).

#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "levystore/mc.hpp"
#include "levystore/overflow.hpp"
#include "levystore/scale.hpp"
#include "levystore/scale_cache.hpp"
#include "scenario.hpp"

namespace levystore::cli {

inline const std::vector<std::string>& columns() {
  static const std::vector<std::string> c = {
      "query_index", "kind",       "t",         "u",          "z",        "r",
      "analytic",    "analytic_error", "mc_estimate", "mc_std_error", "mc_ci_low", "mc_ci_high",
      "mc_paths",    "agree",      "status",    "message"};
  return c;
}

struct ResultRow {
  std::size_t query_index = 0;
  QueryKind kind = QueryKind::OverflowAtT;
  std::optional<double> t, u, z, r;
  std::optional<double> analytic, analytic_error;
  std::optional<mc::EstimatorResult> mc;
  std::optional<bool> agree;
  std::string status = "ok";  // ok | infinite | error
  std::string message;
};

struct RunOptions {
  unsigned threads = 1;
  std::optional<double> tolerance;  // overrides the scenario value
  ScaleCache* cache = nullptr;
};

namespace detail {

inline void append(std::string& msg, const std::string& more) {
  if (more.empty()) return;
  if (!msg.empty()) msg += "; ";
  msg += more;
}

inline std::vector<ResultRow> expand(const Query& q, std::size_t index) {
  auto or_none = [](const std::vector<double>& g) {
    return g.empty() ? std::vector<std::optional<double>>{std::nullopt}
                     : std::vector<std::optional<double>>(g.begin(), g.end());
  };
  std::vector<ResultRow> rows;
  for (auto t : or_none(q.t)) {
    for (auto u : or_none(q.u)) {
      for (auto z : or_none(q.z)) {
        for (auto r : or_none(q.r)) {
          ResultRow row;
          row.query_index = index;
          row.kind = q.kind;
          row.t = t;
          row.u = u;
          row.z = z;
          row.r = r;
          rows.push_back(row);
        }
      }
    }
  }
  return rows;
}

inline void set_analytic(ResultRow& row, double value, double err, const std::string& diag) {
  row.analytic = value;
  row.analytic_error = err;
  if (std::isinf(value)) row.status = "infinite";
  append(row.message, diag);
}

inline void evaluate_analytic(ResultRow& row, const Scenario& s, const RunOptions& o) {
  const auto& m = s.model;
  const auto tol = o.tolerance ? o.tolerance : s.tolerance;
  TableSource source;
  if (o.cache) {
    source = [&o](const LaplaceExponent& psi, double r, const std::vector<double>& grid) {
      return o.cache->get_or_compute(psi, r, grid);
    };
  }
  const bool storage = m.orientation() == Orientation::Storage;
  try {
    switch (row.kind) {
      case QueryKind::OverflowAtT: {
        if (storage) {
          OverflowOptions opts;
          if (tol) opts.tol = *tol;
          const auto res = overflow({m, *row.t, *row.u}, opts);
          set_analytic(row, res.probability, res.abs_error_estimate, "");
          append(row.message, std::string("method ") + to_string(res.method));
        } else if (*row.u == 0.0) {
          set_analytic(row, 1.0, 0.0, "inventory level leaves 0 at once");
        } else {
          // From an empty start Z(t) has the law of sup_{s<=t} Y(s).
          const auto v = overflow_by_time({m, 0.0, *row.u}, *row.t, {}, tol.value_or(1e-6));
          set_analytic(row, v.value, v.abs_error_estimate, v.diagnostic);
          append(row.message, "inventory: P(Z(t) > u) = P(tau(u) < t) from z = 0");
        }
        break;
      }
      case QueryKind::ProbBusy: {
        const double v = prob_busy(m, *row.t, tol ? std::min(*tol, 1e-9) : 1e-11);
        set_analytic(row, v, m.has_finite_variation() ? tol.value_or(1e-11) : 0.0, "");
        break;
      }
      case QueryKind::OverflowByT: {
        const auto v = overflow_by_time({m, *row.z, *row.u}, *row.t, {}, tol.value_or(1e-6));
        set_analytic(row, v.value, v.abs_error_estimate, v.diagnostic);
        break;
      }
      case QueryKind::ExpectedTau: {
        const FirstPassageQuery q{m, *row.z, *row.u};
        const auto v = storage ? expected_tau_storage(q) : expected_tau_inventory(q, {}, source);
        set_analytic(row, v.value, v.abs_error_estimate, v.diagnostic);
        break;
      }
      case QueryKind::FpTransform: {
        const FirstPassageQuery q{m, *row.z, *row.u};
        const auto v = storage ? fp_transform_storage(q, *row.r)
                               : fp_transform_inventory(q, *row.r, {}, source);
        set_analytic(row, v.value, v.abs_error_estimate, v.diagnostic);
        break;
      }
    }
  } catch (const NumericalFailure& e) {
    row.status = "error";
    append(row.message, std::string("numerical failure: ") + e.what() +
                            " (best estimate " + std::to_string(e.best_estimate()) + ")");
  } catch (const Error& e) {
    row.status = "error";
    append(row.message, e.what());
  }
}

inline std::uint64_t ensemble_seed(std::uint64_t seed, std::size_t query, std::size_t group) {
  std::uint64_t x = seed ^ (0x9E3779B97F4A7C15ull * (query + 1));
  std::uint64_t a = mc::splitmix64(x);
  x = a ^ group;
  return mc::splitmix64(x);
}

// Runs the ensembles for one query, grouped by starting level z.
inline void evaluate_mc(std::vector<ResultRow>& rows, const Query& q, std::size_t qi,
                        const Scenario& s, const RunOptions& o) {
  std::map<double, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rows.size(); ++i) groups[rows[i].z.value_or(0.0)].push_back(i);
  std::size_t g = 0;
  for (const auto& [z0, members] : groups) {
    std::vector<mc::Functional> fs;
    double horizon = 0.0;
    for (std::size_t i : members) {
      const auto& row = rows[i];
      switch (q.kind) {
        case QueryKind::OverflowAtT: fs.push_back(mc::LevelExceeds{*row.u, *row.t}); break;
        case QueryKind::ProbBusy: fs.push_back(mc::LevelExceeds{0.0, *row.t}); break;
        case QueryKind::OverflowByT: fs.push_back(mc::MaxExceeds{*row.u, *row.t}); break;
        case QueryKind::ExpectedTau: fs.push_back(mc::TauMean{*row.u}); break;
        case QueryKind::FpTransform: fs.push_back(mc::TauTransform{*row.u, *row.r}); break;
      }
      horizon = std::max(horizon, row.t.value_or(std::max(1.0, *row.u)));
    }
    horizon = s.mc.step * std::ceil(horizon / s.mc.step - 1e-9);
    mc::SimulationConfig cfg{s.model, horizon, s.mc.step, s.mc.paths,
                             ensemble_seed(*s.mc.seed, qi, g++), z0, o.threads};
    try {
      const auto res = mc::estimate_many(fs, cfg).front();
      for (std::size_t k = 0; k < members.size(); ++k) {
        auto& row = rows[members[k]];
        row.mc = res[k];
        if (res[k].right_censored) {
          append(row.message, "mc: " + std::to_string(res[k].censored) +
                                  " paths right-censored, estimate is a lower bound");
        }
      }
    } catch (const Error& e) {
      for (std::size_t i : members) {
        rows[i].status = "error";
        append(rows[i].message, std::string("mc: ") + e.what());
      }
    }
  }
}

}  // namespace detail

inline bool agreement(double analytic, double analytic_err, const mc::EstimatorResult& m) {
  return std::abs(analytic - m.estimate) <= 3.0 * m.std_error + analytic_err + 1e-12;
}

inline std::vector<ResultRow> run_scenario(const Scenario& s, const RunOptions& o = {}) {
  std::vector<std::vector<ResultRow>> per_query;
  for (std::size_t i = 0; i < s.queries.size(); ++i) per_query.push_back(detail::expand(s.queries[i], i));

  if (s.uses_analytic()) {
    std::vector<ResultRow*> work;
    for (auto& rows : per_query)
      for (auto& r : rows) work.push_back(&r);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < work.size(); i = next++) detail::evaluate_analytic(*work[i], s, o);
    };
    const unsigned n = std::max(1u, std::min<unsigned>(o.threads, static_cast<unsigned>(work.size())));
    std::vector<std::thread> pool;
    for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
  }
  if (s.uses_mc()) {
    for (std::size_t i = 0; i < s.queries.size(); ++i) {
      detail::evaluate_mc(per_query[i], s.queries[i], i, s, o);
    }
  }

  std::vector<ResultRow> out;
  for (auto& rows : per_query) {
    for (auto& r : rows) {
      if (s.method == Method::Both && r.status != "error" && r.analytic && r.mc) {
        if (std::isfinite(*r.analytic)) {
          r.agree = agreement(*r.analytic, r.analytic_error.value_or(0.0), *r.mc);
        }
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

inline bool any_failure(const std::vector<ResultRow>& rows) {
  for (const auto& r : rows) {
    if (r.status == "error") return true;
  }
  return false;
}

namespace detail {

inline std::string csv_number(const std::optional<double>& v) {
  if (!v) return "";
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", *v);
  return buf;
}

inline std::string csv_text(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

inline std::vector<std::string> cells(const ResultRow& r) {
  auto opt = [](bool has, double v) { return has ? std::optional<double>(v) : std::nullopt; };
  const auto& m = r.mc;
  return {std::to_string(r.query_index),
          to_string(r.kind),
          csv_number(r.t),
          csv_number(r.u),
          csv_number(r.z),
          csv_number(r.r),
          csv_number(r.analytic),
          csv_number(r.analytic_error),
          csv_number(opt(m.has_value(), m ? m->estimate : 0)),
          csv_number(opt(m.has_value(), m ? m->std_error : 0)),
          csv_number(opt(m.has_value(), m ? m->ci_low : 0)),
          csv_number(opt(m.has_value(), m ? m->ci_high : 0)),
          m ? std::to_string(m->paths) : "",
          r.agree ? (*r.agree ? "true" : "false") : "",
          r.status,
          csv_text(r.message)};
}

}  // namespace detail

inline void write_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << '\n';
  for (const auto& r : rows) {
    const auto c = detail::cells(r);
    for (std::size_t i = 0; i < c.size(); ++i) out << (i ? "," : "") << c[i];
    out << '\n';
  }
}

inline void write_json(std::ostream& out, const Scenario& s, const std::vector<ResultRow>& rows) {
  using json = nlohmann::ordered_json;
  auto num = [](const std::optional<double>& v) -> json {
    if (!v) return nullptr;
    if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
    return *v;
  };
  json doc;
  doc["scenario"] = s.name;
  doc["model"] = s.model.describe();
  doc["method"] = to_string(s.method);
  doc["columns"] = columns();
  json arr = json::array();
  for (const auto& r : rows) {
    json j;
    j["query_index"] = r.query_index;
    j["kind"] = to_string(r.kind);
    j["t"] = num(r.t);
    j["u"] = num(r.u);
    j["z"] = num(r.z);
    j["r"] = num(r.r);
    j["analytic"] = num(r.analytic);
    j["analytic_error"] = num(r.analytic_error);
    if (r.mc) {
      j["mc_estimate"] = r.mc->estimate;
      j["mc_std_error"] = r.mc->std_error;
      j["mc_ci_low"] = r.mc->ci_low;
      j["mc_ci_high"] = r.mc->ci_high;
      j["mc_paths"] = r.mc->paths;
    } else {
      for (const char* k : {"mc_estimate", "mc_std_error", "mc_ci_low", "mc_ci_high", "mc_paths"}) {
        j[k] = nullptr;
      }
    }
    j["agree"] = r.agree ? json(*r.agree) : json(nullptr);
    j["status"] = r.status;
    j["message"] = r.message;
    arr.push_back(std::move(j));
  }
  doc["rows"] = std::move(arr);
  out << doc.dump(2) << '\n';
}

}  // namespace levystore::cli
