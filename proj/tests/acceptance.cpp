// Acceptance run: executes the shipped suite twice and prints one line per
// criterion. Exit status is 0 only when every criterion passes.

#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "degen/experiment.hpp"

namespace fs = std::filesystem;
using degen::ExperimentResult;

namespace {

class Results {
 public:
  explicit Results(const std::vector<ExperimentResult>& rs) {
    for (const auto& r : rs) by_name_[r.name] = &r;
  }

  const ExperimentResult& at(const std::string& name) const {
    const auto it = by_name_.find(name);
    if (it == by_name_.end()) throw std::runtime_error("experiment '" + name + "' missing");
    return *it->second;
  }

  double num(const std::string& name, const std::string& metric) const {
    const auto& m = at(name).metrics;
    if (!m.contains(metric) || !m.at(metric).is_number()) {
      throw std::runtime_error(name + ": metric '" + metric + "' missing");
    }
    return m.at(metric).get<double>();
  }

  bool flag(const std::string& name, const std::string& metric) const {
    const auto& m = at(name).metrics;
    if (!m.contains(metric) || !m.at(metric).is_boolean()) {
      throw std::runtime_error(name + ": metric '" + metric + "' missing");
    }
    return m.at(metric).get<bool>();
  }

  std::vector<double> list(const std::string& name, const std::string& metric) const {
    return at(name).metrics.at(metric).get<std::vector<double>>();
  }

 private:
  std::map<std::string, const ExperimentResult*> by_name_;
};

struct Line {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Line criterion1(const Results& r) {
  const double res = r.num("ex11-residuals", "max_residual");
  const double cases = r.num("ex11-residuals", "cases");
  return {res <= 1e-10 && cases == 9, fmt::format("max |Lu - f| = {:.3g} over {} cases", res, cases)};
}

Line criterion2(const Results& r) {
  const auto errors = r.list("ex11-convergence", "errors");
  const double order = r.num("ex11-convergence", "order_min");
  const bool dec = r.flag("ex11-convergence", "errors_decreasing");
  const double secs = r.at("ex11-convergence").seconds;
  return {dec && order >= 1.0 && secs < 30.0 && errors.size() == 4,
          fmt::format("errors {:.3g} decreasing={} min order {:.3f}, {:.2f} s",
                      fmt::join(errors, " "), dec, order, secs)};
}

Line criterion3(const Results& r) {
  const double a = r.num("exponent-recovery", "alpha_hat:s0.5");
  const double b = r.num("exponent-recovery", "alpha_hat:s2.5-d2");
  const auto in = [](double v) { return v >= 0.45 && v <= 0.55; };
  return {in(a) && in(b), fmt::format("alpha(s=0.5) = {:.4f}, alpha(d2u, s=2.5) = {:.4f}", a, b)};
}

Line criterion4(const Results& r) {
  const std::string n = "gate-sharpness";
  const bool g24 = r.flag(n, "gate:2.4");
  const bool g26 = r.flag(n, "gate:2.6");
  const bool f24 = r.flag(n, "found:2.4");
  const bool f26 = r.flag(n, "found:2.6");
  return {g24 && !g26 && f24 && !f26,
          fmt::format("gate 2.4={} 2.6={}, barrier 2.4={} 2.6={}", g24, g26, f24, f26)};
}

Line criterion5(const Results& r) {
  const double h1 = r.num("trace-forms", "trace_end");
  const double err = std::abs(h1 - (std::exp(-1.0) - 1.0));
  const double compat = r.num("trace-compat", "compat_residual");
  const double dev = r.num("trace-limit", "limit_deviation");
  return {err <= 1e-10 && compat <= 1e-7 && dev <= 1e-3,
          fmt::format("|h(1) - (e^-1 - 1)| = {:.2g}, compatibility {:.2g}, sup_[10,11] |h - f/c| = {:.3g}",
                      err, compat, dev)};
}

Line criterion6(const Results& r) {
  const double rate = r.num("ex11-decay", "rate");
  const auto windows = r.list("elliptic-limit", "holder_k0_window_values");
  bool mono = windows.size() >= 10;
  for (std::size_t i = windows.size() - std::min<std::size_t>(10, windows.size()) + 1; i < windows.size(); ++i) {
    mono = mono && windows[i] < windows[i - 1];
  }
  const double last = windows.empty() ? 1.0 : windows.back();
  return {std::abs(rate - 2.25) <= 0.05 && mono && last < 1e-3,
          fmt::format("fitted rate {:.4f}; last 10 windows decreasing={} final {:.3g}", rate, mono, last)};
}

Line criterion7(const Results& r, const std::vector<ExperimentResult>& all) {
  int pass = 0;
  int na = 0;
  int fail = 0;
  for (const auto& e : all) {
    if (!e.metrics.contains("max_principle")) continue;
    const auto v = e.metrics.at("max_principle").get<std::string>();
    if (v == "pass") ++pass;
    else if (v == "fail") ++fail;
    else ++na;
  }
  const bool lin = r.at("comparison").metrics.at("linfty") == "pass";
  const double C = r.num("comparison", "linfty_C");
  const double sup = r.num("comparison", "sup_u");
  return {fail == 0 && pass > 0 && lin && C <= 1.0 && sup <= 0.5,
          fmt::format("comparison pass/na/fail = {}/{}/{}; L-inf bound {} with C = {:.3g}, sup|u| = {:.4f}",
                      pass, na, fail, lin ? "dominates" : "violated", C, sup)};
}

Line criterion8(const Results& r) {
  const auto slices = r.list("window-dichotomy", "slice_holder_k2_values");
  const auto windows = r.list("window-dichotomy", "holder_k2_window_values");
  const bool dec = r.flag("window-dichotomy", "slice_holder_k2_decreasing");
  bool big = windows.size() == 3;
  for (double w : windows) big = big && w >= 1.0;
  return {dec && slices.back() < 0.2 && big,
          fmt::format("slices {:.4f}; windows {:.3f}", fmt::join(slices, " "), fmt::join(windows, " "))};
}

Line criterion9(const fs::path& a, const fs::path& b) {
  int files = 0;
  std::vector<std::string> diffs;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().extension() != ".csv") continue;
    ++files;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) diffs.push_back(rel.string());
  }
  return {files > 0 && diffs.empty(),
          fmt::format("{} CSV files compared, {} differ{}", files, diffs.size(),
                      diffs.empty() ? "" : " (first: " + diffs.front() + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path root = argc > 1 ? fs::path(argv[1]) : fs::current_path() / "acceptance_out";
  fs::remove_all(root);
  const auto configs = degen::load_catalog(degen::default_config_dir());
  const auto run1 = degen::run_suite(configs, root / "run1", 4);
  const auto run2 = degen::run_suite(configs, root / "run2", 2);
  for (const auto& e : run1.results) {
    if (!e.passed()) std::cout << fmt::format("note: {} exited {}: {}\n", e.name, e.exit_code, e.error);
  }

  const Results r(run1.results);
  std::vector<std::function<Line()>> checks{
      [&] { return criterion1(r); }, [&] { return criterion2(r); },
      [&] { return criterion3(r); }, [&] { return criterion4(r); },
      [&] { return criterion5(r); }, [&] { return criterion6(r); },
      [&] { return criterion7(r, run1.results); }, [&] { return criterion8(r); },
      [&] { return criterion9(root / "run1", root / "run2"); }};
  int failed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    Line line;
    try {
      line = checks[i]();
    } catch (const std::exception& e) {
      line = {false, e.what()};
    }
    if (!line.pass) ++failed;
    std::cout << fmt::format("criterion {}: {} - {}\n", i + 1, line.pass ? "PASS" : "FAIL", line.detail);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", checks.size() - failed, checks.size());
  return failed == 0 ? 0 : 1;
}
