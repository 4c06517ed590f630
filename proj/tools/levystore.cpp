// levystore: scenario runner for overflow and first-passage computations.
//
//   levystore run <file> [--output <path>] [--format csv|json] [--threads <n>] [--tolerance <x>]
//   levystore validate <file>
//   levystore cache clear|stats
//
// Exit codes: 0 success, 1 validation failure, 2 numerical failure(s).

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "runner.hpp"
#include "scenario.hpp"

namespace {

using namespace levystore;

int report(const std::vector<cli::Diagnostic>& diags, std::ostream& out) {
  for (const auto& d : diags) out << "error: " << cli::format(d) << '\n';
  return 1;
}

int do_validate(const std::string& file) {
  const auto parsed = cli::load_scenario(file);
  if (!parsed.scenario) return report(parsed.diagnostics, std::cout);
  std::cout << "ok\n" << cli::normalized(*parsed.scenario);
  return 0;
}

int do_run(const std::string& file, std::string output, std::string format, unsigned threads,
           std::optional<double> tolerance) {
  auto parsed = cli::load_scenario(file);
  if (!parsed.scenario) return report(parsed.diagnostics, std::cerr);
  auto& s = *parsed.scenario;
  if (!format.empty()) s.output.format = format;
  if (!output.empty()) s.output.path = output;

  auto cache = ScaleCache::from_environment();
  cli::RunOptions opts;
  opts.threads = threads;
  opts.tolerance = tolerance;
  opts.cache = &cache;
  const auto rows = cli::run_scenario(s, opts);

  std::ostringstream buf;
  if (s.output.format == "json") cli::write_json(buf, s, rows);
  else cli::write_csv(buf, rows);
  if (s.output.path.empty()) {
    std::cout << buf.str();
  } else {
    std::ofstream out(s.output.path, std::ios::binary);
    if (!out) {
      std::cerr << "error: cannot write " << s.output.path << '\n';
      return 1;
    }
    out << buf.str();
  }
  for (const auto& r : rows) {
    if (r.status == "error") {
      std::cerr << "query " << r.query_index << " (" << cli::to_string(r.kind) << "): " << r.message << '\n';
    }
  }
  return cli::any_failure(rows) ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overflow probabilities and first-passage times of Levy-driven storage and inventory models"};
  app.require_subcommand(1);

  std::string file, output, format;
  unsigned threads = 1;
  double tolerance = 0.0;

  auto* run = app.add_subcommand("run", "Evaluate a scenario file");
  run->add_option("file", file, "Scenario file (YAML)")->required();
  run->add_option("--output", output, "Output path (default: scenario output.path, else stdout)");
  run->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  auto* tol_opt = run->add_option("--tolerance", tolerance, "Analytic target accuracy")
                      ->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a scenario file without computing");
  validate->add_option("file", file, "Scenario file (YAML)")->required();

  auto* cache = app.add_subcommand("cache", "Manage the scale-table cache (LEVYSTORE_CACHE_DIR)");
  std::string action;
  cache->add_option("action", action, "clear or stats")
      ->required()
      ->check(CLI::IsMember({"clear", "stats"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      return do_run(file, output, format, threads,
                    tol_opt->count() ? std::optional<double>(tolerance) : std::nullopt);
    }
    if (*validate) return do_validate(file);
    auto c = ScaleCache::from_environment();
    if (action == "clear") {
      std::cout << "removed " << c.clear() << " cached tables from " << c.directory().string() << '\n';
    } else {
      const auto st = c.stats();
      std::cout << "directory: " << c.directory().string() << '\n'
                << "tables: " << st.files << '\n'
                << "bytes: " << st.bytes << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
