#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "degen/errors.hpp"
#include "degen/experiment.hpp"

#ifndef DEGEN_CONFIG_DIR
#define DEGEN_CONFIG_DIR "configs"
#endif

namespace degen {

namespace {

void check_keys(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : obj.items()) {
    if (!ok.count(item.key())) throw ConfigError(fmt::format("{}: unknown key '{}'", where, item.key()));
  }
}

double get_number(const Json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(fmt::format("{}.{}: expected a number", where, key));
  return v.get<double>();
}

int get_int(const Json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw ConfigError(fmt::format("{}.{}: expected an integer", where, key));
  return v.get<int>();
}

std::string get_string(const Json& obj, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(fmt::format("{}.{}: expected a string", where, key));
  return v.get<std::string>();
}

std::vector<std::string> get_components(const Json& obj, const char* key,
                                        const std::vector<std::string>& fallback,
                                        const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_string()) return {v.get<std::string>()};
  if (v.is_number()) return {fmt::format("{}", v.get<double>())};
  if (!v.is_array()) throw ConfigError(fmt::format("{}.{}: expected a string or an array", where, key));
  std::vector<std::string> out;
  for (const auto& e : v) {
    if (e.is_string()) out.push_back(e.get<std::string>());
    else if (e.is_number()) out.push_back(fmt::format("{}", e.get<double>()));
    else throw ConfigError(fmt::format("{}.{}: entries must be expressions", where, key));
  }
  return out;
}

std::string get_expr_text(const Json& obj, const char* key, const std::string& fallback,
                          const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (v.is_number()) return fmt::format("{}", v.get<double>());
  if (!v.is_string()) throw ConfigError(fmt::format("{}.{}: expected an expression", where, key));
  return v.get<std::string>();
}

Json components_json(const std::vector<std::string>& v) {
  if (v.size() == 1) return v.front();
  return Json(v);
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
  int line = 1;
  int column = 1;
  const std::size_t end = std::min(byte > 0 ? byte - 1 : 0, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

DomainConfig parse_domain(const Json& j) {
  DomainConfig d;
  const std::string type = get_string(j, "type", "interval", "domain");
  if (type == "interval") {
    check_keys(j, "domain", {"type", "a", "b"});
    d.kind = DomainKind::interval;
    d.a = get_number(j, "a", 0.0, "domain");
    d.b = get_number(j, "b", 1.0, "domain");
  } else if (type == "disk") {
    check_keys(j, "domain", {"type", "center", "radius"});
    d.kind = DomainKind::disk;
    if (j.contains("center")) {
      const auto& c = j.at("center");
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
        throw ConfigError("domain.center: expected [x1, x2]");
      }
      d.center = Point(c[0].get<double>(), c[1].get<double>());
    }
    d.radius = get_number(j, "radius", 1.0, "domain");
  } else if (type == "half_strip") {
    check_keys(j, "domain", {"type", "r"});
    d.kind = DomainKind::half_strip;
    d.radius = get_number(j, "r", 1.0, "domain");
  } else {
    throw ConfigError("domain.type: unknown geometry '" + type + "'");
  }
  d.build();  // validates
  return d;
}

Json domain_json(const DomainConfig& d) {
  switch (d.kind) {
    case DomainKind::interval: return Json{{"type", "interval"}, {"a", d.a}, {"b", d.b}};
    case DomainKind::disk:
      return Json{{"type", "disk"}, {"center", {d.center(0), d.center(1)}}, {"radius", d.radius}};
    case DomainKind::half_strip: return Json{{"type", "half_strip"}, {"r", d.radius}};
  }
  return Json::object();
}

std::array<Expr, 4> build_a(const std::vector<std::string>& a, const SymbolTable& sym, int dim) {
  if (a.size() == 1) {
    const Expr s = parse_expr(a.front(), sym);
    return {s, Expr(0.0), Expr(0.0), dim == 2 ? s : Expr(1.0)};
  }
  if (a.size() != 4) throw ConfigError("coefficients.a: expected 1 or 4 entries");
  return {parse_expr(a[0], sym), parse_expr(a[1], sym), parse_expr(a[2], sym), parse_expr(a[3], sym)};
}

std::array<Expr, 2> build_b(const std::vector<std::string>& b, const SymbolTable& sym,
                            const DefiningFunction& rho, int dim) {
  std::array<Expr, 2> out{};
  if (b.size() == 1) {
    const Expr s = parse_expr(b.front(), sym);
    for (int i = 0; i < dim; ++i) out[i] = s * rho.gradient_expr(i);
    return out;
  }
  if (b.size() != 2) throw ConfigError("coefficients.b: expected 1 or 2 entries");
  out[0] = parse_expr(b[0], sym);
  out[1] = dim == 2 ? parse_expr(b[1], sym) : Expr(0.0);
  return out;
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::manufacture: return "manufacture";
    case ExperimentKind::solve: return "solve";
    case ExperimentKind::norms: return "norms";
    case ExperimentKind::exponent: return "exponent";
    case ExperimentKind::barrier: return "barrier";
    case ExperimentKind::converge: return "converge";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(const std::string& name) {
  for (auto k : {ExperimentKind::manufacture, ExperimentKind::solve, ExperimentKind::norms,
                 ExperimentKind::exponent, ExperimentKind::barrier, ExperimentKind::converge}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment kind '" + name + "'");
}

Domain DomainConfig::build() const {
  switch (kind) {
    case DomainKind::interval: return Domain::interval(a, b);
    case DomainKind::disk: return Domain::disk(center, radius);
    case DomainKind::half_strip: return Domain::half_strip(radius);
  }
  throw ConfigError("unknown geometry");
}

double ExperimentConfig::tolerance(const std::string& key) const {
  const auto it = tolerances.find(key);
  if (it == tolerances.end()) throw ConfigError("unknown tolerance '" + key + "'");
  return it->second;
}

ExperimentConfig parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte);
    std::string what = e.what();
    const auto pos = what.find("parse error");
    throw ParseError(pos == std::string::npos ? what : what.substr(pos), line, column);
  }
  check_keys(j, "config",
             {"name", "kind", "description", "domain", "manufactured", "coefficients", "exact", "phi",
              "grid", "horizon", "delta", "schedule", "seed", "sampling", "tolerances", "params",
              "assertions"});
  ExperimentConfig c;
  c.name = get_string(j, "name", "", "config");
  if (c.name.empty()) throw ConfigError("config.name: required");
  if (c.name.find_first_of("/\\ ") != std::string::npos) {
    throw ConfigError("config.name: must not contain spaces or path separators");
  }
  c.kind = parse_experiment_kind(get_string(j, "kind", "solve", "config"));
  c.description = get_string(j, "description", "", "config");
  if (j.contains("domain")) c.domain = parse_domain(j.at("domain"));
  if (j.contains("manufactured")) c.manufactured = get_string(j, "manufactured", "", "config");

  if (j.contains("coefficients")) {
    const auto& k = j.at("coefficients");
    check_keys(k, "coefficients", {"a", "b", "c", "f", "limits"});
    auto& co = c.coefficients;
    co.a = get_components(k, "a", co.a, "coefficients");
    co.b = get_components(k, "b", co.b, "coefficients");
    co.c = get_expr_text(k, "c", co.c, "coefficients");
    co.f = get_expr_text(k, "f", co.f, "coefficients");
    if (k.contains("limits")) {
      const auto& l = k.at("limits");
      check_keys(l, "coefficients.limits", {"a", "b", "c", "f"});
      CoefficientConfig::Limits lim;
      lim.a = get_components(l, "a", lim.a, "coefficients.limits");
      lim.b = get_components(l, "b", lim.b, "coefficients.limits");
      lim.c = get_expr_text(l, "c", lim.c, "coefficients.limits");
      lim.f = get_expr_text(l, "f", lim.f, "coefficients.limits");
      co.limits = lim;
    }
  }
  c.phi = get_expr_text(j, "phi", c.phi, "config");
  if (j.contains("exact")) {
    c.exact = get_expr_text(j, "exact", "0", "config");
    if (c.manufactured) throw ConfigError("config.exact: not allowed together with manufactured");
    if (j.contains("phi") || (j.contains("coefficients") && j.at("coefficients").contains("f"))) {
      throw ConfigError("config.exact: phi and coefficients.f are derived from it and must be omitted");
    }
  }

  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    check_keys(g, "grid", {"N", "gamma", "M", "theta"});
    c.grid.N = get_int(g, "N", c.grid.N, "grid");
    c.grid.gamma = get_number(g, "gamma", c.grid.gamma, "grid");
    c.grid.M = get_int(g, "M", c.grid.M, "grid");
    c.grid.theta = get_number(g, "theta", c.grid.theta, "grid");
  }
  c.grid.validate();
  c.horizon = get_number(j, "horizon", c.horizon, "config");
  if (!(c.horizon > 0.0)) throw ConfigError("config.horizon: must be positive");
  c.delta = get_number(j, "delta", c.delta, "config");
  if (c.delta < 0.0) throw ConfigError("config.delta: must be nonnegative");

  if (j.contains("schedule")) {
    const auto& s = j.at("schedule");
    check_keys(s, "schedule", {"delta0", "ratio", "max_stages", "tolerance"});
    c.schedule.delta0 = get_number(s, "delta0", c.schedule.delta0, "schedule");
    c.schedule.ratio = get_number(s, "ratio", c.schedule.ratio, "schedule");
    c.schedule.max_stages = get_int(s, "max_stages", c.schedule.max_stages, "schedule");
    c.schedule.tolerance = get_number(s, "tolerance", c.schedule.tolerance, "schedule");
  }
  c.schedule.validate();

  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_unsigned()) throw ConfigError("config.seed: expected a nonnegative integer");
    c.seed = s.get<std::uint64_t>();
  }
  c.sampling.seed = c.seed;
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    check_keys(s, "sampling", {"strategy", "random_pairs", "all_pairs_limit"});
    const std::string strategy = get_string(s, "strategy", "all_pairs", "sampling");
    if (strategy == "all_pairs") c.sampling.strategy = PairStrategy::all_pairs;
    else if (strategy == "random_pairs") c.sampling.strategy = PairStrategy::random_pairs;
    else throw ConfigError("sampling.strategy: expected all_pairs or random_pairs");
    c.sampling.random_pairs =
        static_cast<std::size_t>(get_int(s, "random_pairs", static_cast<int>(c.sampling.random_pairs), "sampling"));
    c.sampling.all_pairs_limit = static_cast<std::size_t>(
        get_int(s, "all_pairs_limit", static_cast<int>(c.sampling.all_pairs_limit), "sampling"));
  }

  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) throw ConfigError("tolerances: expected an object");
    for (const auto& item : t.items()) {
      if (!c.tolerances.count(item.key())) {
        throw ConfigError("tolerances: unknown key '" + item.key() + "'");
      }
      if (!item.value().is_number()) throw ConfigError("tolerances." + item.key() + ": expected a number");
      c.tolerances[item.key()] = item.value().get<double>();
    }
  }
  if (j.contains("params")) {
    c.params = j.at("params");
    if (!c.params.is_object()) throw ConfigError("params: expected an object");
  }
  if (j.contains("assertions")) {
    const auto& a = j.at("assertions");
    if (!a.is_array()) throw ConfigError("assertions: expected an array");
    for (const auto& e : a) {
      check_keys(e, "assertions[]", {"metric", "op", "value", "tol"});
      Assertion as;
      as.metric = get_string(e, "metric", "", "assertions[]");
      as.op = get_string(e, "op", "", "assertions[]");
      static const std::set<std::string> ops{"<", "<=", ">", ">=", "==", "!=", "approx"};
      if (as.metric.empty() || !ops.count(as.op) || !e.contains("value")) {
        throw ConfigError("assertions[]: need metric, a known op and value");
      }
      as.value = e.at("value");
      as.tol = get_number(e, "tol", 0.0, "assertions[]");
      c.assertions.push_back(as);
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return parse_config(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line(), e.column());
  }
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["kind"] = to_string(c.kind);
  j["description"] = c.description;
  j["domain"] = domain_json(c.domain);
  if (c.manufactured) j["manufactured"] = *c.manufactured;
  Json co;
  co["a"] = components_json(c.coefficients.a);
  co["b"] = components_json(c.coefficients.b);
  co["c"] = c.coefficients.c;
  if (!c.exact) co["f"] = c.coefficients.f;
  if (c.coefficients.limits) {
    const auto& l = *c.coefficients.limits;
    co["limits"] = Json{{"a", components_json(l.a)}, {"b", components_json(l.b)}, {"c", l.c}, {"f", l.f}};
  }
  j["coefficients"] = co;
  if (c.exact) j["exact"] = *c.exact;
  else j["phi"] = c.phi;
  j["grid"] = Json{{"N", c.grid.N}, {"gamma", c.grid.gamma}, {"M", c.grid.M}, {"theta", c.grid.theta}};
  j["horizon"] = c.horizon;
  j["delta"] = c.delta;
  j["schedule"] = Json{{"delta0", c.schedule.delta0},
                       {"ratio", c.schedule.ratio},
                       {"max_stages", c.schedule.max_stages},
                       {"tolerance", c.schedule.tolerance}};
  j["seed"] = c.seed;
  j["sampling"] =
      Json{{"strategy", c.sampling.strategy == PairStrategy::all_pairs ? "all_pairs" : "random_pairs"},
           {"random_pairs", c.sampling.random_pairs},
           {"all_pairs_limit", c.sampling.all_pairs_limit}};
  Json tol = Json::object();
  for (const auto& [k, v] : c.tolerances) tol[k] = v;
  j["tolerances"] = tol;
  j["params"] = c.params;
  Json as = Json::array();
  for (const auto& a : c.assertions) {
    Json e{{"metric", a.metric}, {"op", a.op}, {"value", a.value}};
    if (a.op == "approx") e["tol"] = a.tol;
    as.push_back(e);
  }
  j["assertions"] = as;
  return j;
}

std::string serialize_config(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

ProblemSetup build_problem(const ExperimentConfig& config) {
  const Domain domain = config.domain.build();
  if (config.manufactured) {
    const auto spec = parse_manufactured(*config.manufactured, domain);
    auto sol = build(spec);
    IbvpProblem p{domain, sol.rho, sol.coeffs, boundary_data(sol).phi, sol.u};
    return ProblemSetup{std::move(p), std::move(sol)};
  }
  const DefiningFunction rho = make_defining_function(domain);
  const SymbolTable sym{{"rho", rho.expr()}};
  const int dim = domain.dim();
  const auto& cc = config.coefficients;
  CoefficientSet k;
  k.dim = dim;
  k.a = build_a(cc.a, sym, dim);
  k.b = build_b(cc.b, sym, rho, dim);
  k.c = parse_expr(cc.c, sym);
  k.f = parse_expr(cc.f, sym);
  if (cc.a.size() == 1 && k.a[0].is_constant()) {
    k.lambda = k.a[0].constant_value();
    k.Lambda = k.lambda;
  }
  if (cc.limits) {
    LimitCoefficients lim;
    lim.a = build_a(cc.limits->a, sym, dim);
    lim.b = build_b(cc.limits->b, sym, rho, dim);
    lim.c = parse_expr(cc.limits->c, sym);
    lim.f = parse_expr(cc.limits->f, sym);
    k.limits = lim;
  } else if (k.time_independent()) {
    k.limits = LimitCoefficients{k.a, k.b, k.c, k.f};
  }
  if (config.exact) {
    const Expr u = parse_expr(*config.exact, sym);
    k.f = operator_expr(k, rho, u);
    if (!cc.limits && k.time_independent()) k.limits = LimitCoefficients{k.a, k.b, k.c, k.f};
    return ProblemSetup{IbvpProblem{domain, rho, k, u, u}, std::nullopt};
  }
  const Expr phi = parse_expr(config.phi, sym);
  return ProblemSetup{IbvpProblem{domain, rho, k, phi, std::nullopt}, std::nullopt};
}

std::vector<AssertionResult> evaluate_assertions(const std::vector<Assertion>& assertions,
                                                 const Json& metrics) {
  std::vector<AssertionResult> out;
  for (const auto& a : assertions) {
    AssertionResult r;
    r.assertion = a;
    if (!metrics.contains(a.metric)) {
      r.message = "metric '" + a.metric + "' not produced";
      out.push_back(r);
      continue;
    }
    r.actual = metrics.at(a.metric);
    const Json& v = a.value;
    if (r.actual.is_number() && v.is_number()) {
      const double x = r.actual.get<double>();
      const double y = v.get<double>();
      if (a.op == "<") r.passed = x < y;
      else if (a.op == "<=") r.passed = x <= y;
      else if (a.op == ">") r.passed = x > y;
      else if (a.op == ">=") r.passed = x >= y;
      else if (a.op == "==") r.passed = x == y;
      else if (a.op == "!=") r.passed = x != y;
      else r.passed = std::abs(x - y) <= a.tol;
    } else if (a.op == "==") {
      r.passed = r.actual == v;
    } else if (a.op == "!=") {
      r.passed = r.actual != v;
    } else {
      r.message = "operator '" + a.op + "' needs numbers";
    }
    if (r.message.empty()) {
      r.message = fmt::format("{} {} {} {}", a.metric, r.actual.dump(), a.op, v.dump());
      if (a.op == "approx") r.message += fmt::format(" (tol {})", a.tol);
    }
    out.push_back(r);
  }
  return out;
}

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries{
      {"ex11-residuals", "ex11-residuals.json",
       "square-root example family / manufactured residual matrix"},
      {"ex11-convergence", "ex11-convergence.json",
       "square-root example / exact-solution grid refinement"},
      {"ex11-norms", "ex11-norms.json",
       "square-root example / weighted Holder norms and boundary vanishing"},
      {"exponent-recovery", "exponent-recovery.json",
       "square-root example / sharp boundary Holder exponent"},
      {"gate-sharpness", "gate-sharpness.json",
       "regularity gate at the positive root / time-independent barrier"},
      {"trace-forms", "trace-forms.json", "forced boundary trace / constant-coefficient closed form"},
      {"trace-compat", "trace-compat.json",
       "forced boundary trace / compatibility identity for smooth coefficients"},
      {"trace-limit", "trace-limit.json", "forced boundary trace / boundary limit f/c at infinity"},
      {"comparison", "comparison.json", "maximum principle / L-infinity a priori bound"},
      {"ex11-decay", "ex11-decay.json", "square-root example / L-infinity decay at infinity"},
      {"elliptic-limit", "elliptic-limit.json",
       "time-independent data / convergence to the elliptic solution"},
      {"window-dichotomy", "window-dichotomy.json",
       "windowed versus per-slice convergence / counterexample"},
  };
  return entries;
}

std::string catalog_text() {
  std::string out;
  for (const auto& e : catalog()) out += fmt::format("{} ({})\n", e.name, e.exercises);
  return out;
}

std::filesystem::path default_config_dir() { return DEGEN_CONFIG_DIR; }

std::vector<ExperimentConfig> load_catalog(const std::filesystem::path& config_dir) {
  std::vector<ExperimentConfig> out;
  for (const auto& e : catalog()) {
    auto c = load_config(config_dir / e.file);
    if (c.name != e.name) {
      throw ConfigError(fmt::format("{}: name '{}' does not match catalog entry '{}'", e.file,
                                    c.name, e.name));
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace degen
