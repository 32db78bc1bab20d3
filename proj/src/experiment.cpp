#include "degen/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <fmt/format.h>

#include "degen/boundary_trace.hpp"
#include "degen/errors.hpp"
#include "degen/plot.hpp"
#include "degen/verify.hpp"

namespace degen {

namespace fs = std::filesystem;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

void check_params(const Json& p, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!p.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : p.items()) {
    if (!ok.count(item.key())) throw ConfigError(fmt::format("{}: unknown key '{}'", where, item.key()));
  }
}

double pnum(const Json& p, const char* key, double fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number()) throw ConfigError(fmt::format("params.{}: expected a number", key));
  return p.at(key).get<double>();
}

int pint(const Json& p, const char* key, int fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_number_integer()) throw ConfigError(fmt::format("params.{}: expected an integer", key));
  return p.at(key).get<int>();
}

bool pbool(const Json& p, const char* key, bool fallback) {
  if (!p.contains(key)) return fallback;
  if (!p.at(key).is_boolean()) throw ConfigError(fmt::format("params.{}: expected true or false", key));
  return p.at(key).get<bool>();
}

std::string pstr(const Json& p, const char* key, const std::string& fallback) {
  if (!p.contains(key)) return fallback;
  const auto& v = p.at(key);
  if (v.is_number()) return fmt::format("{}", v.get<double>());
  if (!v.is_string()) throw ConfigError(fmt::format("params.{}: expected a string", key));
  return v.get<std::string>();
}

std::vector<double> pnums(const Json& p, const char* key, std::vector<double> fallback) {
  if (!p.contains(key)) return fallback;
  const auto& v = p.at(key);
  if (!v.is_array()) throw ConfigError(fmt::format("params.{}: expected an array of numbers", key));
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(fmt::format("params.{}: expected an array of numbers", key));
    out.push_back(e.get<double>());
  }
  return out;
}

GridSpec grid_from(const Json& p, GridSpec g) {
  if (p.is_null()) return g;
  check_params(p, "grid", {"N", "gamma", "M", "theta"});
  g.N = pint(p, "N", g.N);
  g.gamma = pnum(p, "gamma", g.gamma);
  g.M = pint(p, "M", g.M);
  g.theta = pnum(p, "theta", g.theta);
  g.validate();
  return g;
}

struct NormRequest {
  NormClass cls = NormClass::holder;
  int k = 0;
  double alpha = 0.5;

  std::string tag() const { return fmt::format("{}_k{}", to_string(cls), k); }
};

std::vector<NormRequest> norm_requests(const Json& p, const char* key) {
  std::vector<NormRequest> out;
  if (!p.contains(key)) return out;
  const auto& v = p.at(key);
  if (!v.is_array()) throw ConfigError(fmt::format("params.{}: expected an array", key));
  for (const auto& e : v) {
    check_params(e, fmt::format("params.{}[]", key), {"class", "k", "alpha"});
    NormRequest r;
    r.cls = parse_norm_class(pstr(e, "class", "holder"));
    r.k = pint(e, "k", 0);
    r.alpha = pnum(e, "alpha", 0.5);
    if (r.k < 0 || !(r.alpha > 0.0 && r.alpha <= 1.0)) {
      throw ConfigError(fmt::format("params.{}: need k >= 0 and alpha in (0, 1]", key));
    }
    out.push_back(r);
  }
  return out;
}

Json array_of(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1] || (v[i] == 0.0 && v[i - 1] == 0.0))) return false;
  }
  return !v.empty();
}

class Context {
 public:
  Context(const ExperimentConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

  const ExperimentConfig& cfg() const { return cfg_; }
  Json& metrics() { return metrics_; }
  const std::vector<std::string>& files() const { return files_; }

  std::ofstream open(const std::string& name) {
    files_.push_back(name);
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + (dir_ / name).string());
    return out;
  }

  void plot(const std::string& name, const PlotSpec& spec, const std::vector<PlotSeries>& series) {
    files_.push_back(name);
    write_svg(dir_ / name, spec, series);
  }

  void write_field(const std::string& name, const SpaceTimeField& f) {
    auto out = open(name);
    out << "x1,x2,t,value\n";
    for (int l = 0; l < f.level_count(); ++l) {
      for (int n = 0; n < f.node_count(); ++n) {
        const Point x = f.point(n);
        out << num(x(0)) << ',' << num(f.dim == 2 ? x(1) : 0.0) << ',' << num(f.times[l]) << ','
            << num(f.at(l, n)) << '\n';
      }
    }
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  Json metrics_ = Json::object();
  std::vector<std::string> files_;
};

SolveOptions solve_options(const ExperimentConfig& cfg, const Json& p) {
  SolveOptions o;
  o.unit_weight = pbool(p, "unit_weight", false);
  o.store_stride = pint(p, "store_stride", 1);
  o.compat_threshold = cfg.tolerance("compat_threshold");
  o.trace_tol = cfg.tolerance("trace_tol");
  return o;
}

// ---------------------------------------------------------------- manufacture

void run_manufacture(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"s", "m", "samples", "sample_horizon"});
  const Domain domain = cfg.domain.build();
  const auto base = parse_manufactured(cfg.manufactured.value_or("ex11:"), domain);
  const auto s_values = pnums(p, "s", {0.5, 1.25, 2.5});
  const auto m_values = pnums(p, "m", {0, 1, 2});
  const int samples = pint(p, "samples", 1000);
  const auto pts = random_interior_samples(domain, samples, cfg.seed, pnum(p, "sample_horizon", 1.0));

  auto out = ctx.open("residuals.csv");
  out << "s,m,tau,max_residual\n";
  double worst = 0.0;
  int cases = 0;
  for (double s : s_values) {
    for (double m : m_values) {
      ManufacturedSpec spec = base;
      spec.s = s;
      spec.m = static_cast<int>(m);
      spec.validate();
      const auto sol = build(spec);
      const double r = residual_check(sol, pts);
      worst = std::max(worst, r);
      ++cases;
      out << num(s) << ',' << spec.m << ',' << num(sol.tau) << ',' << num(r) << '\n';
    }
  }
  ctx.metrics()["cases"] = cases;
  ctx.metrics()["samples"] = samples;
  ctx.metrics()["max_residual"] = worst;
}

// ---------------------------------------------------------------------- solve

void record_checks(Context& ctx, const SpaceTimeField& run, const IbvpProblem& problem,
                   const Json& p) {
  const auto& cfg = ctx.cfg();
  const auto mp = check_max_principle(run, problem, cfg.tolerance("comparison"));
  ctx.metrics()["max_principle"] = to_string(mp.verdict);
  ctx.metrics()["max_principle_max"] = mp.max_value;
  if (!p.contains("linfty")) return;
  const auto& q = p.at("linfty");
  check_params(q, "params.linfty", {"c0"});
  const auto lb = check_linfty_bound(run, problem, pnum(q, "c0", 0.0), cfg.tolerance("linfty"));
  auto& m = ctx.metrics();
  m["linfty"] = to_string(lb.verdict);
  m["linfty_C"] = lb.C;
  m["linfty_K_F"] = lb.K_F;
  m["linfty_mu"] = lb.mu;
  m["linfty_r"] = lb.r;
  m["linfty_offset"] = lb.offset;
  m["linfty_Phi"] = lb.Phi;
  m["linfty_F"] = lb.F;
  m["linfty_sup_bound"] = lb.sup_bound;
  m["linfty_worst_ratio"] = lb.worst_ratio;
}

void run_trace(Context& ctx, const IbvpProblem& problem, const Json& q) {
  const auto& cfg = ctx.cfg();
  check_params(q, "params.trace", {"points", "count", "horizon", "limit_windows"});
  const auto pts = boundary_points(problem.domain, problem.rho, pint(q, "points", 3));
  const double H = pnum(q, "horizon", cfg.horizon);
  const auto times = uniform_times(H, pint(q, "count", 101));
  const auto tr = trace_h(problem.coeffs, problem.phi, pts, times, cfg.tolerance("trace_tol"));
  {
    auto out = ctx.open("trace.csv");
    write_trace_csv(out, tr);
  }
  auto& m = ctx.metrics();
  m["trace_end"] = tr.values(0, tr.time_count() - 1);
  m["trace_quadrature_error"] = tr.achieved;
  m["compat_residual"] = compatibility_residual(tr);
  if (problem.exact) {
    double err = 0.0;
    for (int i = 0; i < tr.point_count(); ++i) {
      for (int j = 0; j < tr.time_count(); ++j) {
        err = std::max(err, std::abs(tr.values(i, j) - (*problem.exact)(tr.points[i].x, times[j])));
      }
    }
    m["trace_exact_error"] = err;
  }
  std::vector<PlotSeries> series;
  for (int i = 0; i < tr.point_count(); ++i) {
    PlotSeries s{fmt::format("boundary point {}", tr.points[i].param), times, {}};
    for (int j = 0; j < tr.time_count(); ++j) s.y.push_back(tr.values(i, j));
    series.push_back(s);
  }
  ctx.plot("trace.svg", PlotSpec{"lateral trace h", "t", "h"}, series);
  const auto windows = pnums(q, "limit_windows", {});
  if (!windows.empty()) {
    const auto rep = boundary_limit(problem.coeffs, tr, windows);
    auto out = ctx.open("boundary_limit.csv");
    out << "T,deviation,rate\n";
    for (const auto& w : rep.windows) out << num(w.T) << ',' << num(w.deviation) << ',' << num(w.rate) << '\n';
    m["limit_value"] = rep.limit.front();
    m["limit_deviation"] = rep.windows.back().deviation;
    m["limit_decaying"] = rep.decaying;
  }
}

void run_solve(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"refine", "M_rule", "solve", "viscosity", "trace", "linfty",
                             "unit_weight", "store_stride", "write_field"});
  const auto setup = build_problem(cfg);
  const auto& problem = setup.problem;
  const SolveOptions opts = solve_options(cfg, p);
  auto& m = ctx.metrics();

  if (p.contains("trace")) run_trace(ctx, problem, p.at("trace"));
  if (!pbool(p, "solve", true)) return;

  if (p.contains("refine")) {
    if (!problem.exact) throw ConfigError("params.refine needs an exact solution (manufactured case)");
    const auto Ns = pnums(p, "refine", {});
    const Json rule = p.value("M_rule", Json{{"kind", "fixed"}});
    check_params(rule, "params.M_rule", {"kind", "factor", "divisor"});
    const std::string kind = pstr(rule, "kind", "fixed");
    std::vector<double> errors;
    std::vector<double> orders;
    auto out = ctx.open("errors.csv");
    out << "N,M,error,order\n";
    for (double Nd : Ns) {
      GridSpec g = cfg.grid;
      g.N = static_cast<int>(Nd);
      if (kind == "parabolic") g.M = std::max(2, g.N * g.N / pint(rule, "divisor", 16));
      else if (kind == "linear") g.M = std::max(2, static_cast<int>(std::lround(pnum(rule, "factor", 2.5) * g.N)));
      else if (kind != "fixed") throw ConfigError("params.M_rule.kind: expected fixed, linear or parabolic");
      g.validate();
      const auto run = solve_ibvp(problem, g, cfg.delta, cfg.horizon, opts);
      const double e = max_node_error(run, *problem.exact);
      double order = std::nan("");
      if (!errors.empty()) {
        order = std::log(errors.back() / e) / std::log(Nd / Ns[errors.size() - 1]);
        orders.push_back(order);
      }
      errors.push_back(e);
      out << g.N << ',' << g.M << ',' << num(e) << ',' << (std::isnan(order) ? "" : num(order)) << '\n';
    }
    m["errors"] = array_of(errors);
    m["orders"] = array_of(orders);
    m["order_min"] = orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end());
    m["errors_decreasing"] = strictly_decreasing(errors);
    m["error_finest"] = errors.empty() ? 0.0 : errors.back();
    ctx.plot("errors.svg", PlotSpec{"max-node error under refinement", "N", "error", true, true},
             {PlotSeries{"error", Ns, errors}});
    return;
  }

  SpaceTimeField run;
  if (pbool(p, "viscosity", false)) {
    const auto vv = vanishing_viscosity(problem, cfg.grid, cfg.schedule, cfg.horizon, opts);
    run = vv.field;
    auto out = ctx.open("viscosity.csv");
    out << "stage,delta,difference\n";
    for (std::size_t j = 0; j < vv.report.deltas.size(); ++j) {
      out << j << ',' << num(vv.report.deltas[j]) << ','
          << (j < vv.report.differences.size() ? num(vv.report.differences[j]) : "") << '\n';
    }
    m["stabilized"] = vv.report.stabilized;
    m["stage"] = vv.report.stage;
    m["differences"] = array_of(vv.report.differences);
    m["differences_decreasing"] = strictly_decreasing(vv.report.differences);
  } else {
    run = solve_ibvp(problem, cfg.grid, cfg.delta, cfg.horizon, opts);
  }
  if (pbool(p, "write_field", true)) ctx.write_field("solution.csv", run);
  m["sup_u"] = run.sup_abs();
  if (problem.exact) m["error"] = max_node_error(run, *problem.exact);
  record_checks(ctx, run, problem, p);
}

// ---------------------------------------------------------------------- norms

void run_norms(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"u", "lattice", "gamma", "times", "classes", "membership"});
  const auto setup = build_problem(cfg);
  const auto& problem = setup.problem;
  const SymbolTable sym{{"rho", problem.rho.expr()}};
  Expr u;
  if (p.contains("u")) u = parse_expr(pstr(p, "u", "0"), sym);
  else if (problem.exact) u = *problem.exact;
  else throw ConfigError("params.u: required without a manufactured case");

  const auto space = norm_lattice(problem.domain, pint(p, "lattice", 40), pnum(p, "gamma", 1.0));
  const auto times = pnums(p, "times", {0.0, 0.5, 1.0});
  if (times.empty()) throw ConfigError("params.times: need at least one time");
  for (const auto& r : norm_requests(p, "classes")) {
    const bool slice = r.cls == NormClass::slice_holder || r.cls == NormClass::slice_weighted;
    const ExprSampler sampler(u, problem.rho,
                              space_time_lattice(space, slice ? std::vector<double>{times.front()} : times));
    const auto rep = weighted_norm(sampler, r.cls, r.k, r.alpha, cfg.sampling);
    auto out = ctx.open(fmt::format("holder_{}.csv", r.tag()));
    write_holder_csv(out, rep);
    ctx.metrics()[r.tag() + "_total"] = rep.total;
    ctx.metrics()[r.tag() + "_strategy"] = rep.strategy;
  }
  if (p.contains("membership")) {
    const auto& q = p.at("membership");
    check_params(q, "params.membership", {"k", "times", "boundary_samples"});
    const auto reps = check_membership(u, problem.rho, problem.domain, pint(q, "k", 0),
                                       pnums(q, "times", {times.front()}),
                                       pint(q, "boundary_samples", 3));
    auto out = ctx.open("membership.csv");
    out << "weight,param,smallest,rate,vanishes\n";
    bool all = true;
    double min_rate = std::numeric_limits<double>::infinity();
    for (const auto& r : reps) {
      out << r.weight << ',' << num(r.param) << ',' << num(r.smallest) << ',' << num(r.rate) << ','
          << (r.vanishes ? "true" : "false") << '\n';
      all = all && r.vanishes;
      min_rate = std::min(min_rate, r.rate);
    }
    ctx.metrics()["membership_vanishes"] = all;
    ctx.metrics()["membership_min_rate"] = min_rate;
  }
}

// ------------------------------------------------------------------- exponent

void run_exponent(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"cases"});
  if (!p.contains("cases") || !p.at("cases").is_array()) throw ConfigError("params.cases: expected an array");
  const Domain domain = cfg.domain.build();

  std::vector<PlotSeries> series;
  for (const auto& cj : p.at("cases")) {
    check_params(cj, "params.cases[]", {"label", "manufactured", "source", "derivative", "grid",
                                        "horizon", "fit", "boundary_param", "times"});
    const std::string label = pstr(cj, "label", "case");
    ExperimentConfig local = cfg;
    if (cj.contains("manufactured")) local.manufactured = pstr(cj, "manufactured", "");
    if (!local.manufactured) throw ConfigError("params.cases[].manufactured: required");
    const auto setup = build_problem(local);
    const auto& problem = setup.problem;
    const auto bp = boundary_point_at(domain, problem.rho, pnum(cj, "boundary_param", domain.dim() == 1 ? domain.a() : 0.0));
    std::array<int, 2> beta{0, 0};
    if (cj.contains("derivative")) {
      const auto d = pnums(cj, "derivative", {0, 0});
      if (d.size() != 2) throw ConfigError("params.cases[].derivative: expected [b1, b2]");
      beta = {static_cast<int>(d[0]), static_cast<int>(d[1])};
    }
    FitOptions fo;
    if (cj.contains("fit")) {
      const auto& f = cj.at("fit");
      check_params(f, "params.cases[].fit", {"j_min", "j_max", "drop"});
      fo.j_min = pint(f, "j_min", fo.j_min);
      fo.j_max = pint(f, "j_max", fo.j_max);
      fo.drop = pint(f, "drop", fo.drop);
    }
    const Expr du = SmoothField(*problem.exact).derivative(beta, 0);
    const double H = pnum(cj, "horizon", cfg.horizon);
    const std::string source = pstr(cj, "source", "solver");
    ExponentFit fit;
    if (source == "closed") {
      const auto times = uniform_times(H, pint(cj, "times", 11));
      fit = fit_boundary_exponent([&](const Point& x, double t) { return du(x, t); },
                                  [&](double t) { return du(bp.x, t); }, bp, times, fo);
    } else if (source == "solver") {
      const GridSpec g = grid_from(cj.value("grid", Json()), cfg.grid);
      const auto run = solve_ibvp(problem, g, cfg.delta, H, solve_options(cfg, Json::object()));
      const auto field = beta[0] + beta[1] > 0 ? differentiate(run, beta, 0) : run;
      std::vector<double> h;
      for (double t : field.times) h.push_back(du(bp.x, t));
      fit = fit_boundary_exponent(field, h, bp, fo);
      ctx.metrics()["solver_error:" + label] = max_node_error(run, *problem.exact);
    } else {
      throw ConfigError("params.cases[].source: expected solver or closed");
    }
    auto out = ctx.open(fmt::format("exponent_{}.csv", label));
    out << "depth,sup\n";
    for (std::size_t i = 0; i < fit.depths.size(); ++i) out << num(fit.depths[i]) << ',' << num(fit.sups[i]) << '\n';
    ctx.metrics()["alpha_hat:" + label] = fit.defined ? Json(fit.alpha) : Json(nullptr);
    ctx.metrics()["r2:" + label] = fit.r2;
    series.push_back(PlotSeries{label, fit.depths, fit.sups});
  }
  ctx.plot("exponent.svg", PlotSpec{"boundary oscillation against depth", "depth", "sup", true, true},
           series);
}

// -------------------------------------------------------------------- barrier

void run_barrier(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"mus", "mode", "x0", "gate", "lattice", "lattice_2d", "time_nodes",
                             "horizon", "max_power", "radius_levels"});
  const auto setup = build_problem(cfg);
  const auto& problem = setup.problem;
  const BarrierMode mode = parse_barrier_mode(pstr(p, "mode", "time_independent"));
  const auto x0v = pnums(p, "x0", {problem.domain.dim() == 1 ? problem.domain.a() : 0.0, 0.0});
  if (x0v.size() != 2) throw ConfigError("params.x0: expected [x1, x2]");
  const Point x0(x0v[0], x0v[1]);
  BarrierOptions bo;
  bo.lattice = pint(p, "lattice", bo.lattice);
  bo.lattice_2d = pint(p, "lattice_2d", bo.lattice_2d);
  bo.time_nodes = pint(p, "time_nodes", bo.time_nodes);
  bo.horizon = pnum(p, "horizon", bo.horizon);
  bo.max_power = pint(p, "max_power", bo.max_power);
  bo.radius_levels = pint(p, "radius_levels", bo.radius_levels);
  const bool gate = pbool(p, "gate", true);

  auto out = ctx.open("barrier.csv");
  out << "mu,mode,found,A,K,C0,r,onset,slack,worst_x1,worst_x2,worst_t,gate_pass,gate_margin\n";
  for (double mu : pnums(p, "mus", {0.5})) {
    const auto cert = find_barrier(problem.coeffs, problem.rho, problem.domain, mu, x0, mode, bo);
    const double slack = recheck_barrier(cert, problem.coeffs, problem.rho);
    const std::string key = fmt::format("{}", mu);
    std::string gate_pass;
    std::string gate_margin;
    if (gate) {
      int k = static_cast<int>(std::floor(mu));
      double alpha = mu - k;
      if (alpha == 0.0) {
        --k;
        alpha = 1.0;
      }
      const auto g = gate_check(problem.coeffs, problem.domain, problem.rho, k, alpha);
      gate_pass = g.pass ? "true" : "false";
      gate_margin = num(g.margin);
      ctx.metrics()["gate:" + key] = g.pass;
    }
    out << num(mu) << ',' << to_string(mode) << ',' << (cert.found ? "true" : "false") << ','
        << num(cert.A) << ',' << num(cert.K) << ',' << num(cert.C0) << ',' << num(cert.r) << ','
        << num(cert.onset) << ',' << num(slack) << ',' << num(cert.worst(0)) << ','
        << num(cert.worst(1)) << ',' << num(cert.worst_t) << ',' << gate_pass << ',' << gate_margin
        << '\n';
    ctx.metrics()["found:" + key] = cert.found;
    ctx.metrics()["C0:" + key] = cert.C0;
    ctx.metrics()["K:" + key] = cert.K;
    if (cert.found) ctx.metrics()["slack:" + key] = slack;
    if (!cert.diagnostic.empty()) ctx.metrics()["diagnostic:" + key] = cert.diagnostic;
    if (cert.found) {
      auto lat = ctx.open(fmt::format("certificate_mu{}.csv", key));
      lat << "x1,x2,t\n";
      for (const auto& s : cert.lattice) lat << num(s.x(0)) << ',' << num(s.x(1)) << ',' << num(s.t) << '\n';
    }
  }
}

// ------------------------------------------------------------------- converge

void write_trace(Context& ctx, const std::string& name, const ConvergenceTrace& tr) {
  auto out = ctx.open(name);
  write_convergence_csv(out, tr);
}

void run_converge_closed(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"mode", "u", "g", "slices", "windows", "length", "space_points",
                             "slice_points", "gamma", "times_per_window", "classes",
                             "slice_classes", "epsilon"});
  const auto setup = build_problem(cfg);
  const auto& problem = setup.problem;
  const SymbolTable sym{{"rho", problem.rho.expr()}};
  const Expr u = p.contains("u") ? parse_expr(pstr(p, "u", "0"), sym)
                                 : (problem.exact ? *problem.exact : throw ConfigError("params.u: required"));
  const Expr g = parse_expr(pstr(p, "g", "0"), sym);
  const double gamma = pnum(p, "gamma", 1.0);
  const double eps = pnum(p, "epsilon", 1e-3);
  auto& m = ctx.metrics();

  const auto slices = pnums(p, "slices", {});
  if (!slices.empty()) {
    const auto space = norm_lattice(problem.domain, pint(p, "slice_points", 200), gamma);
    for (const auto& r : norm_requests(p, "slice_classes")) {
      std::vector<double> values;
      auto out = ctx.open(fmt::format("slices_{}.csv", r.tag()));
      out << "t,value\n";
      for (double t : slices) {
        const auto rep = slice_norm(u - g, problem.rho, space, t, r.cls, r.k, r.alpha, cfg.sampling);
        values.push_back(rep.total);
        out << num(t) << ',' << num(rep.total) << '\n';
      }
      m[r.tag() + "_values"] = array_of(values);
      m[r.tag() + "_decreasing"] = strictly_decreasing(values);
      m[r.tag() + "_last"] = values.back();
      m[r.tag() + "_max"] = *std::max_element(values.begin(), values.end());
    }
  }
  const auto windows = pnums(p, "windows", {});
  if (!windows.empty()) {
    const auto space = norm_lattice(problem.domain, pint(p, "space_points", 40), gamma);
    std::vector<PlotSeries> series;
    for (const auto& r : norm_requests(p, "classes")) {
      ConvergenceOptions o;
      o.cls = r.cls;
      o.k = r.k;
      o.alpha = r.alpha;
      o.epsilon = eps;
      o.sampling = cfg.sampling;
      const auto tr = windowed_convergence(u, g, problem.rho, space, pint(p, "times_per_window", 41),
                                           windows, pnum(p, "length", 1.0), o);
      write_trace(ctx, fmt::format("windows_{}.csv", r.tag()), tr);
      std::vector<double> values;
      for (const auto& w : tr.windows) values.push_back(w.value);
      m[r.tag() + "_window_values"] = array_of(values);
      m[r.tag() + "_window_min"] = *std::min_element(values.begin(), values.end());
      m[r.tag() + "_converging"] = tr.converging;
      series.push_back(PlotSeries{r.tag(), windows, values});
    }
    ctx.plot("windows.svg", PlotSpec{"windowed norms", "T", "value", false, true}, series);
  }
}

void run_converge_solver(Context& ctx) {
  const auto& cfg = ctx.cfg();
  const auto& p = cfg.params;
  check_params(p, "params", {"mode", "window", "t_max", "steps_per_window", "reference", "classes",
                             "tail", "epsilon", "decay_alpha", "node_stride", "level_stride",
                             "unit_weight", "store_stride"});
  const auto setup = build_problem(cfg);
  const auto& problem = setup.problem;
  auto& m = ctx.metrics();
  const std::string reference = pstr(p, "reference", "zero");

  std::optional<SpaceTimeField> v;
  double delta = cfg.delta;
  if (reference == "elliptic") {
    const auto ell = solve_elliptic_limit(problem, cfg.grid, cfg.schedule);
    m["elliptic_stabilized"] = ell.report.stabilized;
    m["elliptic_stage"] = ell.report.stage;
    m["elliptic_differences"] = array_of(ell.report.differences);
    v = ell.field;
    delta = ell.field.delta;
    ctx.write_field("elliptic.csv", *v);
  } else if (reference != "zero") {
    throw ConfigError("params.reference: expected zero or elliptic");
  }
  m["delta"] = delta;

  const double window = pnum(p, "window", 1.0);
  const auto run = long_time_run(problem, cfg.grid, delta, window, pnum(p, "t_max", 10.0),
                                 pint(p, "steps_per_window", 100), solve_options(cfg, p));
  std::vector<ConvergenceOptions> classes;
  for (const auto& r : norm_requests(p, "classes")) {
    ConvergenceOptions o;
    o.cls = r.cls;
    o.k = r.k;
    o.alpha = r.alpha;
    o.epsilon = pnum(p, "epsilon", 1e-3);
    o.tail = pint(p, "tail", 0);
    o.sampling = cfg.sampling;
    classes.push_back(o);
  }
  const auto rep = long_time_report(run, v ? &*v : nullptr, problem.rho, classes,
                                    pint(p, "node_stride", 1), pint(p, "level_stride", 1));
  {
    auto out = ctx.open("linf.csv");
    out << "T,linf\n";
    for (std::size_t i = 0; i < rep.T.size(); ++i) out << num(rep.T[i]) << ',' << num(rep.linf[i]) << '\n';
  }
  m["linf"] = array_of(rep.linf);
  m["rate_model"] = rep.rate.model;
  m["rate"] = rep.rate.rate;
  m["rate_r2"] = rep.rate.r2;
  m["rate_accepted"] = rep.rate.accepted;
  std::vector<PlotSeries> series{PlotSeries{"sup |u - v|", rep.T, rep.linf}};
  for (std::size_t c = 0; c < rep.traces.size(); ++c) {
    const auto& tr = rep.traces[c];
    const std::string tag = fmt::format("{}_k{}", to_string(tr.cls), tr.k);
    write_trace(ctx, fmt::format("windows_{}.csv", tag), tr);
    std::vector<double> values;
    for (const auto& w : tr.windows) values.push_back(w.value);
    m[tag + "_window_values"] = array_of(values);
    m[tag + "_decreasing"] = tr.decreasing;
    m[tag + "_converging"] = tr.converging;
    m[tag + "_last"] = values.empty() ? 0.0 : values.back();
    series.push_back(PlotSeries{tag, rep.T, values});
  }
  ctx.plot("decay.svg", PlotSpec{"window norms of u - v", "T", "value", false, true}, series);

  if (p.contains("decay_alpha")) {
    SpaceTimeField diff = run.field;
    if (v) {
      for (auto& lv : diff.levels) lv -= v->levels.front();
    }
    std::vector<Point> x0s;
    for (const auto& bp : boundary_points(problem.domain, problem.rho, 3)) x0s.push_back(bp.x);
    const auto dr = decay_certificate(diff, x0s, pnum(p, "decay_alpha", 0.5), window);
    auto out = ctx.open("decay.csv");
    out << "T,C\n";
    for (std::size_t i = 0; i < dr.window_T.size(); ++i) out << num(dr.window_T[i]) << ',' << num(dr.window_C[i]) << '\n';
    m["decay_rate"] = dr.fitted_rate;
    m["decay_decreasing"] = dr.decaying;
    m["decay_bounded"] = dr.bounded;
  }
}

void run_converge(Context& ctx) {
  const std::string mode = pstr(ctx.cfg().params, "mode", "solver");
  if (mode == "closed") run_converge_closed(ctx);
  else if (mode == "solver") run_converge_solver(ctx);
  else throw ConfigError("params.mode: expected closed or solver");
}

void flatten(const std::string& prefix, const Json& j, std::string& out) {
  if (j.is_object() && !j.empty()) {
    for (const auto& item : j.items()) {
      flatten(prefix.empty() ? item.key() : prefix + "." + item.key(), item.value(), out);
    }
    return;
  }
  out += prefix + " = " + (j.is_string() ? j.get<std::string>() : j.dump()) + "\n";
}

void write_manifest(const fs::path& dir, const ExperimentConfig& cfg, const ExperimentResult& r) {
  std::string text;
  flatten("config", to_json(cfg), text);
  flatten("metric", r.metrics, text);
  for (std::size_t i = 0; i < r.assertions.size(); ++i) {
    const auto& a = r.assertions[i];
    text += fmt::format("assertion.{} = {} ({})\n", i, a.passed ? "pass" : "fail", a.message);
  }
  for (const auto& f : r.files) text += "file = " + f + "\n";
  text += fmt::format("status = {}\n", r.passed() ? "ok" : "failed");
  text += fmt::format("exit_code = {}\n", r.exit_code);
  if (!r.error.empty()) text += "error = " + r.error + "\n";
  text += fmt::format("timing.seconds = {:.3f}\n", r.seconds);
  std::ofstream out(dir / "manifest.txt", std::ios::binary);
  out << text;
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const AssertionFailure*>(&e)) return 5;
  if (dynamic_cast<const GateError*>(&e)) return 3;
  if (dynamic_cast<const NumericError*>(&e)) return 4;
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return 2;
  if (dynamic_cast<const nlohmann::json::exception*>(&e)) return 2;
  return 4;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out_dir);
  Context ctx(config, out_dir);
  switch (config.kind) {
    case ExperimentKind::manufacture: run_manufacture(ctx); break;
    case ExperimentKind::solve: run_solve(ctx); break;
    case ExperimentKind::norms: run_norms(ctx); break;
    case ExperimentKind::exponent: run_exponent(ctx); break;
    case ExperimentKind::barrier: run_barrier(ctx); break;
    case ExperimentKind::converge: run_converge(ctx); break;
  }
  ExperimentResult r;
  r.name = config.name;
  r.kind = config.kind;
  r.metrics = ctx.metrics();
  r.files = ctx.files();
  r.assertions = evaluate_assertions(config.assertions, r.metrics);
  {
    std::ofstream out(out_dir / "assertions.csv", std::ios::binary);
    out << "metric,op,value,actual,passed\n";
    for (const auto& a : r.assertions) {
      out << a.assertion.metric << ',' << a.assertion.op << ',' << a.assertion.value.dump() << ','
          << a.actual.dump() << ',' << (a.passed ? "true" : "false") << '\n';
    }
    r.files.push_back("assertions.csv");
  }
  const bool ok = std::all_of(r.assertions.begin(), r.assertions.end(),
                              [](const AssertionResult& a) { return a.passed; });
  if (!ok) {
    r.exit_code = 5;
    r.error = "in-config assertion failed";
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out_dir, config, r);
  return r;
}

ExperimentResult run_experiment_guarded(const ExperimentConfig& config, const fs::path& out_dir) {
  const auto start = std::chrono::steady_clock::now();
  try {
    return run_experiment(config, out_dir);
  } catch (const std::exception& e) {
    ExperimentResult r;
    r.name = config.name;
    r.kind = config.kind;
    r.exit_code = exit_code_for(e);
    r.error = e.what();
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (!ec) write_manifest(out_dir, config, r);
    return r;
  }
}

SuiteResult run_suite(const std::vector<ExperimentConfig>& configs, const fs::path& out_dir,
                      int jobs) {
  if (jobs < 1) throw ArgumentError("--jobs must be at least 1");
  std::set<std::string> names;
  for (const auto& c : configs) {
    if (!names.insert(c.name).second) throw ConfigError("duplicate experiment name '" + c.name + "'");
  }
  SuiteResult suite;
  suite.results.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      suite.results[i] = run_experiment_guarded(configs[i], out_dir / configs[i].name);
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(1, configs.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  pool.clear();

  fs::create_directories(out_dir);
  std::ofstream out(out_dir / "summary.csv", std::ios::binary);
  out << "name,kind,status,exit_code,assertions_passed,assertions_total\n";
  for (const auto& r : suite.results) {
    const auto passed = std::count_if(r.assertions.begin(), r.assertions.end(),
                                      [](const AssertionResult& a) { return a.passed; });
    out << r.name << ',' << to_string(r.kind) << ',' << (r.passed() ? "ok" : "failed") << ','
        << r.exit_code << ',' << passed << ',' << r.assertions.size() << '\n';
    if (suite.exit_code == 0 && r.exit_code != 0) suite.exit_code = r.exit_code;
  }
  return suite;
}

}  // namespace degen
