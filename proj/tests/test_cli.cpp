#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <sys/wait.h>

#include "runner.hpp"
#include "scenario.hpp"

using namespace levystore;
using namespace levystore::cli;
namespace fs = std::filesystem;

namespace {

const std::string source_dir = LEVYSTORE_SOURCE_DIR;
const std::string cli_path = LEVYSTORE_CLI_PATH;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') quoted = !quoted;
    else if (c == ',' && !quoted) {
      out.push_back(cell);
      cell.clear();
    } else {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) rows.push_back(split(line));
  return rows;
}

ParseOutcome parse(const std::string& text) { return parse_scenario(text); }

bool mentions(const ParseOutcome& o, const std::string& where, const std::string& fragment) {
  for (const auto& d : o.diagnostics) {
    if (d.where == where && d.message.find(fragment) != std::string::npos) return true;
  }
  return false;
}

struct Invocation {
  int exit_code;
  std::string out;
};

class CliProcess : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("levystore-cli-test-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    const auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Invocation invoke(const std::string& args) {
    const auto out = dir_ / "stdout.txt";
    const std::string cmd = "LEVYSTORE_CACHE_DIR='" + (dir_ / "cache").string() + "' '" + cli_path + "' " +
                            args + " > '" + out.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_file(out)};
  }

  fs::path dir_;
};

const char* small_mc = R"(
model:
  family: inverse_gaussian
  params: {delta: 1, gamma: 1}
  orientation: inventory
method: both
mc: {paths: 3000, step: 0.01, seed: 5}
queries:
  - {kind: overflow_by_t, t: 2, u: 1}
  - {kind: expected_tau, u: 1, z: [0, 0.5]}
  - {kind: fp_transform, u: 1, r: [0.5, 2]}
)";

}  // namespace

TEST(Scenario, WellFormedFileParses) {
  const auto o = load_scenario(source_dir + "/scenarios/gamma_storage.yaml");
  ASSERT_TRUE(o.scenario.has_value()) << (o.diagnostics.empty() ? "" : format(o.diagnostics[0]));
  EXPECT_EQ(o.scenario->model.family(), Family::Gamma);
  EXPECT_EQ(o.scenario->method, Method::Both);
  EXPECT_EQ(o.scenario->mc.seed, std::optional<std::uint64_t>(42));
  EXPECT_EQ(o.scenario->queries.size(), 5u);
}

TEST(Scenario, NormalizedEchoReparses) {
  const auto a = load_scenario(source_dir + "/scenarios/gamma_storage.yaml");
  ASSERT_TRUE(a.scenario);
  const auto text = normalized(*a.scenario);
  const auto b = parse(text);
  ASSERT_TRUE(b.scenario);
  EXPECT_EQ(normalized(*b.scenario), text);
}

TEST(Scenario, ZAboveThresholdCitesContract) {
  const auto o = parse(R"(
model: {family: gamma, params: {a: 1, b: 1}, orientation: inventory}
method: analytic
queries:
  - {kind: expected_tau, u: 1, z: 1.5}
)");
  EXPECT_FALSE(o.scenario);
  EXPECT_TRUE(mentions(o, "queries[0].z", "0 <= z <= u"));
  EXPECT_EQ(o.diagnostics[0].line, 5);
}

TEST(Scenario, SeedIsMandatoryForMonteCarlo) {
  const auto o = parse(R"(
model: {family: gamma, params: {a: 1, b: 1}}
method: mc
mc: {paths: 10, step: 0.1}
queries: []
)");
  EXPECT_TRUE(mentions(o, "mc.seed", "mandatory"));
}

TEST(Scenario, InvalidAlphaNamesParameterAndRange) {
  const auto o = parse(R"(
model:
  family: stable
  params: {alpha: 0.5, sigma: 1}
method: analytic
queries: []
)");
  ASSERT_EQ(o.diagnostics.size(), 1u);
  EXPECT_EQ(o.diagnostics[0].where, "model.params.alpha");
  EXPECT_NE(o.diagnostics[0].message.find("[1, 2)"), std::string::npos);
  EXPECT_EQ(o.diagnostics[0].line, 4);
  EXPECT_GT(o.diagnostics[0].column, 0);
}

TEST(Scenario, EveryViolationIsListed) {
  const auto o = parse(R"(
model: {family: stable, params: {alpha: 3, sigma: 1}, colour: red}
method: mc
mc: {paths: 10, step: 0.01}
queries:
  - {kind: overflow_at_t, t: 0.015, u: -1}
  - {kind: fp_transform, u: 1, r: -2}
  - {kind: nonsense}
)");
  EXPECT_TRUE(mentions(o, "model.colour", "unknown key"));
  EXPECT_TRUE(mentions(o, "model.params.alpha", "[1, 2)"));
  EXPECT_TRUE(mentions(o, "mc.seed", "mandatory"));
  EXPECT_TRUE(mentions(o, "queries[0].t", "multiple of mc.step"));
  EXPECT_TRUE(mentions(o, "queries[0].u", ">= 0"));
  EXPECT_TRUE(mentions(o, "queries[1].r", ">= 0"));
  EXPECT_TRUE(mentions(o, "queries[2].kind", "unknown kind"));
}

TEST(Scenario, SyntaxErrorHasPosition) {
  const auto o = parse("model: {family: gamma\nqueries: [\n");
  ASSERT_EQ(o.diagnostics.size(), 1u);
  EXPECT_GT(o.diagnostics[0].line, 0);
}

TEST(Scenario, OrientationSpecificQueries) {
  const auto o = parse(R"(
model: {family: gamma, params: {a: 1, b: 1}, orientation: inventory}
method: analytic
queries:
  - {kind: prob_busy, t: 1}
)");
  EXPECT_TRUE(mentions(o, "queries[0].kind", "storage"));
}

TEST(Runner, EmptyQueryListGivesNoRows) {
  const auto o = parse("model: {family: gamma, params: {a: 1, b: 1}}\nmethod: analytic\nqueries: []\n");
  ASSERT_TRUE(o.scenario);
  const auto rows = run_scenario(*o.scenario);
  EXPECT_TRUE(rows.empty());
  std::ostringstream csv;
  write_csv(csv, rows);
  EXPECT_EQ(parse_csv(csv.str()).size(), 1u);
}

TEST(Runner, ColumnsAreFixed) {
  const std::vector<std::string> expected = {
      "query_index", "kind",         "t",           "u",            "z",         "r",
      "analytic",    "analytic_error", "mc_estimate", "mc_std_error", "mc_ci_low", "mc_ci_high",
      "mc_paths",    "agree",        "status",      "message"};
  EXPECT_EQ(columns(), expected);
}

TEST(Runner, GoldenCanonicalScenario) {
  const auto o = load_scenario(source_dir + "/tests/golden/canonical.yaml");
  ASSERT_TRUE(o.scenario);
  std::ostringstream csv;
  write_csv(csv, run_scenario(*o.scenario));
  const auto got = parse_csv(csv.str());
  const auto want = parse_csv(read_file(source_dir + "/tests/golden/canonical.csv"));
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].size(), want[i].size()) << "row " << i;
    for (std::size_t j = 0; j < got[i].size(); ++j) {
      const auto& g = got[i][j];
      const auto& w = want[i][j];
      const bool numeric = i > 0 && !w.empty() && (std::isdigit(static_cast<unsigned char>(w[0])) || w[0] == '-');
      if (numeric && columns()[j] != "query_index") {
        const double a = std::stod(g), b = std::stod(w);
        const double tol = columns()[j] == "analytic_error" ? 0.5 * std::abs(b) + 1e-12 : 1e-9 * (1 + std::abs(b));
        EXPECT_NEAR(a, b, tol) << "row " << i << " column " << columns()[j];
      } else {
        EXPECT_EQ(g, w) << "row " << i << " column " << (j < columns().size() ? columns()[j] : "?");
      }
    }
  }
}

TEST(Runner, BothMethodsAgreeOnInventoryScenario) {
  const auto o = parse(small_mc);
  ASSERT_TRUE(o.scenario);
  const auto rows = run_scenario(*o.scenario);
  ASSERT_EQ(rows.size(), 5u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.status, "ok") << r.message;
    ASSERT_TRUE(r.agree.has_value());
    EXPECT_TRUE(*r.agree) << to_string(r.kind) << " analytic " << *r.analytic << " mc " << r.mc->estimate;
  }
}

TEST(Runner, NumericalFailureBecomesRowError) {
  const auto o = parse(R"(
model: {family: inverse_gaussian, params: {delta: 2, gamma: 1}, orientation: storage}
method: analytic
queries:
  - {kind: overflow_by_t, t: 0.5, u: 1}
  - {kind: expected_tau, u: 1}
)");
  ASSERT_TRUE(o.scenario);
  const auto rows = run_scenario(*o.scenario);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].status, "error");
  EXPECT_FALSE(rows[0].message.empty());
  EXPECT_EQ(rows[1].status, "ok");
  EXPECT_TRUE(any_failure(rows));
}

TEST_F(CliProcess, ValidatePrintsOkAndEcho) {
  const auto r = invoke("validate '" + source_dir + "/scenarios/gamma_storage.yaml'");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(r.out.rfind("ok\n", 0), 0u);
  EXPECT_NE(r.out.find("family: gamma"), std::string::npos);
}

TEST_F(CliProcess, ValidationFailureExitsOne) {
  const auto p = write("bad.yaml", "model: {family: gamma, params: {a: -1, b: 1}}\nmethod: analytic\nqueries: []\n");
  const auto v = invoke("validate '" + p.string() + "'");
  EXPECT_EQ(v.exit_code, 1);
  EXPECT_NE(v.out.find("line 1"), std::string::npos);
  EXPECT_NE(v.out.find("model.params.a"), std::string::npos);
  EXPECT_EQ(invoke("run '" + p.string() + "'").exit_code, 1);
}

TEST_F(CliProcess, RowErrorsExitTwo) {
  const auto p = write("fail.yaml", R"(
model: {family: inverse_gaussian, params: {delta: 2, gamma: 1}, orientation: storage}
method: analytic
queries:
  - {kind: overflow_by_t, t: 0.5, u: 1}
)");
  const auto r = invoke("run '" + p.string() + "'");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find(",error,"), std::string::npos);
}

TEST_F(CliProcess, EmptyRunSucceeds) {
  const auto p = write("empty.yaml", "model: {family: degenerate}\nmethod: analytic\nqueries: []\n");
  const auto r = invoke("run '" + p.string() + "'");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(parse_csv(r.out).size(), 1u);
}

TEST_F(CliProcess, OutputIsIndependentOfThreadCount) {
  const auto p = write("mc.yaml", small_mc);
  const auto a = dir_ / "a.csv", b = dir_ / "b.csv", j = dir_ / "c.json";
  EXPECT_EQ(invoke("run '" + p.string() + "' --threads 1 --output '" + a.string() + "'").exit_code, 0);
  EXPECT_EQ(invoke("run '" + p.string() + "' --threads 4 --output '" + b.string() + "'").exit_code, 0);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_FALSE(read_file(a).empty());
  EXPECT_EQ(invoke("run '" + p.string() + "' --format json --output '" + j.string() + "'").exit_code, 0);
  EXPECT_EQ(read_file(j).front(), '{');
}

TEST_F(CliProcess, CacheVerbs) {
  const auto p = write("inv.yaml", R"(
model: {family: gamma, params: {a: 1, b: 1}, orientation: inventory}
method: analytic
queries:
  - {kind: fp_transform, u: 1, r: 1}
)");
  EXPECT_EQ(invoke("run '" + p.string() + "'").exit_code, 0);
  const auto stats = invoke("cache stats");
  EXPECT_EQ(stats.exit_code, 0);
  EXPECT_NE(stats.out.find("tables: 1"), std::string::npos) << stats.out;
  EXPECT_EQ(invoke("cache clear").exit_code, 0);
  EXPECT_NE(invoke("cache stats").out.find("tables: 0"), std::string::npos);
}
