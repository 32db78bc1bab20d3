// degenlab: experiment runner for the degenerate parabolic toolkit.
//
//   degenlab list
//   degenlab solve --config configs/ex11-convergence.json --out out
//   degenlab suite --jobs 4 --out out
//
// Exit codes: 0 ok, 2 config, 3 gate, 4 numeric, 5 assertion.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "degen/errors.hpp"
#include "degen/experiment.hpp"

namespace {

struct GlobalOptions {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> tol;
};

void apply_overrides(degen::ExperimentConfig& cfg, const GlobalOptions& g) {
  if (g.seed) {
    cfg.seed = *g.seed;
    cfg.sampling.seed = *g.seed;
  }
  for (const auto& item : g.tol) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw degen::ConfigError("--tol: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (!cfg.tolerances.count(key)) throw degen::ConfigError("--tol: unknown tolerance '" + key + "'");
    try {
      std::size_t used = 0;
      const double v = std::stod(item.substr(eq + 1), &used);
      if (used != item.size() - eq - 1) throw std::invalid_argument(item);
      cfg.tolerances[key] = v;
    } catch (const std::logic_error&) {
      throw degen::ConfigError("--tol: bad number in '" + item + "'");
    }
  }
}

void report(const degen::ExperimentResult& r, const std::filesystem::path& dir) {
  std::cout << fmt::format("{} [{}] -> {}\n", r.name, degen::to_string(r.kind), dir.string());
  for (const auto& item : r.metrics.items()) {
    std::cout << fmt::format("  {} = {}\n", item.key(), item.value().dump());
  }
  for (const auto& a : r.assertions) {
    std::cout << fmt::format("  [{}] {}\n", a.passed ? "ok" : "FAIL", a.message);
  }
  if (!r.error.empty()) std::cerr << fmt::format("error: {}\n", r.error);
  std::cout << fmt::format("  exit {} ({:.2f} s)\n", r.exit_code, r.seconds);
}

int run_single(degen::ExperimentKind kind, const GlobalOptions& g) {
  if (g.config.empty()) throw degen::ConfigError("--config is required");
  auto cfg = degen::load_config(g.config);
  if (cfg.kind != kind) {
    throw degen::ConfigError(fmt::format("config '{}' is a {} experiment, not {}", g.config,
                                         degen::to_string(cfg.kind), degen::to_string(kind)));
  }
  apply_overrides(cfg, g);
  const auto dir = std::filesystem::path(g.out) / cfg.name;
  const auto r = degen::run_experiment_guarded(cfg, dir);
  report(r, dir);
  return r.exit_code;
}

int run_suite(const GlobalOptions& g) {
  const std::filesystem::path dir = g.config.empty() ? degen::default_config_dir() : std::filesystem::path(g.config);
  auto configs = degen::load_catalog(dir);
  for (auto& c : configs) apply_overrides(c, g);
  const auto suite = degen::run_suite(configs, g.out, g.jobs);
  for (const auto& r : suite.results) {
    std::cout << fmt::format("{:<20} {:<12} {:<7} exit {}  {:.2f} s\n", r.name, degen::to_string(r.kind),
                             r.passed() ? "ok" : "FAILED", r.exit_code, r.seconds);
    if (!r.error.empty()) std::cout << "    " << r.error << '\n';
  }
  std::cout << fmt::format("summary: {}\n", (std::filesystem::path(g.out) / "summary.csv").string());
  return suite.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments for uniformly degenerate parabolic equations"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--config", g.config, "Config file (suite: config directory)");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--jobs", g.jobs, "Concurrent experiments in a suite")->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "Tolerance override key=value (repeatable)");

  std::map<CLI::App*, degen::ExperimentKind> kinds;
  for (auto kind : {degen::ExperimentKind::manufacture, degen::ExperimentKind::solve,
                    degen::ExperimentKind::norms, degen::ExperimentKind::exponent,
                    degen::ExperimentKind::barrier, degen::ExperimentKind::converge}) {
    auto* sub = app.add_subcommand(degen::to_string(kind), "Run one " + degen::to_string(kind) + " experiment");
    kinds[sub] = kind;
  }
  auto* suite = app.add_subcommand("suite", "Run every shipped experiment");
  auto* list = app.add_subcommand("list", "Print the experiment catalog");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list->parsed()) {
      std::cout << degen::catalog_text();
      return 0;
    }
    if (suite->parsed()) return run_suite(g);
    for (const auto& [sub, kind] : kinds) {
      if (sub->parsed()) return run_single(kind, g);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return degen::exit_code_for(e);
  }
  return 2;
}
