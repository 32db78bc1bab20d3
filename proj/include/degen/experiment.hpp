#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "degen/geometry.hpp"
#include "degen/holder_norms.hpp"
#include "degen/manufactured.hpp"
#include "degen/solver.hpp"

namespace degen {

using Json = nlohmann::ordered_json;

enum class ExperimentKind { manufacture, solve, norms, exponent, barrier, converge };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

struct DomainConfig {
  DomainKind kind = DomainKind::interval;
  double a = 0.0;
  double b = 1.0;
  Point center = Point::Zero();
  double radius = 1.0;  // disk radius or half-strip half-width

  Domain build() const;
};

/// Coefficient expressions. A single entry for `a` means a * identity, a
/// single entry for `b` means b * grad(rho); otherwise components are listed
/// (a row-major 2x2, b per axis). The symbol `rho` is available.
struct CoefficientConfig {
  std::vector<std::string> a{"1"};
  std::vector<std::string> b{"0"};
  std::string c = "-1";
  std::string f = "0";
  struct Limits {
    std::vector<std::string> a{"1"};
    std::vector<std::string> b{"0"};
    std::string c = "-1";
    std::string f = "0";
  };
  std::optional<Limits> limits;
};

struct Assertion {
  std::string metric;
  std::string op;  // < <= > >= == != approx
  Json value;
  double tol = 0.0;  // approx only
};

struct ExperimentConfig {
  std::string name;
  ExperimentKind kind = ExperimentKind::solve;
  std::string description;
  DomainConfig domain;
  std::optional<std::string> manufactured;  // "ex11:..." supplies coefficients, phi, exact u
  CoefficientConfig coefficients;
  std::optional<std::string> exact;  // closed-form u: f = L u, phi = u, data for artificial faces
  std::string phi = "0";
  GridSpec grid;
  double horizon = 1.0;
  double delta = 0.0;
  DeltaSchedule schedule;
  std::uint64_t seed = 20240601;
  PairSampling sampling;
  std::map<std::string, double> tolerances{
      {"compat_threshold", 1e-6}, {"trace_tol", 1e-10}, {"comparison", 1e-9}, {"linfty", 1e-9}};
  Json params = Json::object();
  std::vector<Assertion> assertions;

  double tolerance(const std::string& key) const;
};

/// Parses a JSON config. Syntax errors raise ParseError with line/column;
/// unknown keys and invalid values raise ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field, defaults included, so parse(serialize(c)) == c.
Json to_json(const ExperimentConfig& config);
std::string serialize_config(const ExperimentConfig& config);

/// Problem assembled from a config: a manufactured case when named, else
/// the coefficient expressions.
struct ProblemSetup {
  IbvpProblem problem;
  std::optional<ManufacturedSolution> manufactured;
};

ProblemSetup build_problem(const ExperimentConfig& config);

struct AssertionResult {
  Assertion assertion;
  Json actual;
  bool passed = false;
  std::string message;
};

struct ExperimentResult {
  std::string name;
  ExperimentKind kind = ExperimentKind::solve;
  Json metrics = Json::object();
  std::vector<AssertionResult> assertions;
  std::vector<std::string> files;  // relative to the output directory
  double seconds = 0.0;
  int exit_code = 0;               // 0 ok, 2 config, 3 gate, 4 numeric, 5 assertion
  std::string error;

  bool passed() const { return exit_code == 0; }
};

/// Runs one experiment, writing CSVs, SVG plots and manifest.txt into
/// `out_dir`. Library errors propagate; assertion failures set exit_code 5.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir);

/// Same, with library errors mapped onto exit codes instead of thrown.
ExperimentResult run_experiment_guarded(const ExperimentConfig& config,
                                        const std::filesystem::path& out_dir);

int exit_code_for(const std::exception& e);

std::vector<AssertionResult> evaluate_assertions(const std::vector<Assertion>& assertions,
                                                 const Json& metrics);

struct CatalogEntry {
  std::string name;
  std::string file;       // relative to the config directory
  std::string exercises;  // what the experiment exercises
};

const std::vector<CatalogEntry>& catalog();
std::string catalog_text();

/// Directory of the shipped configs (compiled in, overridable).
std::filesystem::path default_config_dir();

struct SuiteResult {
  std::vector<ExperimentResult> results;  // catalog order
  int exit_code = 0;                      // first nonzero experiment code
};

/// Runs the configs concurrently with at most `jobs` workers; each writes to
/// out_dir/<name>. summary.csv lists name,kind,status,exit_code,assertions.
SuiteResult run_suite(const std::vector<ExperimentConfig>& configs,
                      const std::filesystem::path& out_dir, int jobs);

/// Loads every catalog entry from `config_dir`.
std::vector<ExperimentConfig> load_catalog(const std::filesystem::path& config_dir);

}  // namespace degen
