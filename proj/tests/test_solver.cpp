#include <doctest.h>

#include <cmath>

#include "degen/errors.hpp"
#include "degen/manufactured.hpp"
#include "degen/solver.hpp"

using namespace degen;

namespace {

ManufacturedSpec make(double a, double b, double c, double s, int m) {
  ManufacturedSpec sp;
  sp.a = a;
  sp.b = b;
  sp.c = c;
  sp.s = s;
  sp.m = m;
  return sp;
}

IbvpProblem problem_of(const ManufacturedSolution& sol) {
  return IbvpProblem{sol.spec.domain, sol.rho, sol.coeffs, boundary_data(sol).phi, sol.u};
}

IbvpProblem constant_problem(const Domain& dom, double a, double b, double c, const Expr& f,
                             const Expr& phi) {
  auto rho = make_defining_function(dom);
  auto coeffs = constant_coefficients(rho, dom.dim(), a, b, c, f);
  return IbvpProblem{dom, rho, coeffs, phi, std::nullopt};
}

GridSpec grid(int N, int M, double gamma = 2.0) {
  GridSpec g;
  g.N = N;
  g.M = M;
  g.gamma = gamma;
  return g;
}

}  // namespace

TEST_CASE("graded nodes are monotone and hit the ends") {
  for (double gamma : {1.0, 2.0, 3.5}) {
    const auto x = graded_nodes(0.0, 1.0, 41, gamma);
    CHECK(x.front() == 0.0);
    CHECK(x.back() == 1.0);
    for (std::size_t i = 1; i < x.size(); ++i) CHECK(x[i] > x[i - 1]);
    const auto y = graded_nodes_one_sided(0.5, 20, gamma);
    CHECK(y.front() == 0.0);
    CHECK(y.back() == 0.5);
    for (std::size_t i = 1; i < y.size(); ++i) CHECK(y[i] > y[i - 1]);
  }
  // gamma = 2 concentrates nodes near the faces
  const auto x = graded_nodes(0.0, 1.0, 40, 2.0);
  CHECK(x[1] == doctest::Approx(0.5 * std::pow(2.0 / 40, 2)));
}

TEST_CASE("grid and schedule validation") {
  CHECK_THROWS_AS(grid(4, 10).validate(), ConfigError);
  CHECK_THROWS_AS(grid(10, 1).validate(), ConfigError);
  CHECK_THROWS_AS(grid(10, 10, 0.5).validate(), ConfigError);
  GridSpec g = grid(10, 10);
  g.theta = 0.3;
  CHECK_THROWS_AS(g.validate(), ConfigError);
  DeltaSchedule s;
  s.ratio = 1.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = DeltaSchedule{};
  CHECK(s.delta(2) == doctest::Approx(1e-2 / 16));
}

TEST_CASE("zero data gives the zero solution") {
  const auto p = constant_problem(Domain::interval(0, 1), 1, 0, 0, Expr(0.0), Expr(0.0));
  const auto u = solve_ibvp(p, grid(20, 10), 0.0, 1.0);
  CHECK(u.level_count() == 11);
  CHECK(u.sup_abs() == 0.0);
  const auto r = vanishing_viscosity(p, grid(20, 10), DeltaSchedule{}, 1.0);
  CHECK(r.report.stabilized);
  CHECK(r.report.stage == 1);
  CHECK(r.report.differences.at(0) == 0.0);
}

TEST_CASE("self-convergence on the square-root solution") {
  const auto sol = build(make(1, 0, -2, 0.5, 0));
  const auto p = problem_of(sol);
  double prev = 0.0;
  for (int N : {40, 80, 160, 320}) {
    const auto u = solve_ibvp(p, grid(N, N * N / 16), 0.0, 1.0);
    const double e = max_node_error(u, sol.u);
    if (prev > 0.0) {
      CHECK(e < prev);
      CHECK(std::log2(prev / e) >= 1.0);
    }
    prev = e;
  }
  // with M proportional to N the error still decreases
  const double e80 = max_node_error(solve_ibvp(p, grid(80, 200), 0.0, 1.0), sol.u);
  const double e160 = max_node_error(solve_ibvp(p, grid(160, 400), 0.0, 1.0), sol.u);
  CHECK(e160 < e80);
}

TEST_CASE("degenerate boundary levels equal the imposed trace") {
  const auto p = constant_problem(Domain::interval(0, 1), 1, 0, -1, Expr(1.0), Expr(0.0));
  const auto u = solve_ibvp(p, grid(20, 50), 0.0, 1.0);
  for (int l = 0; l < u.level_count(); ++l) {
    const double h = std::exp(-u.times[l]) - 1.0;
    CHECK(u.at(l, 0) == doctest::Approx(h).epsilon(1e-9));
    CHECK(u.at(l, u.node_count() - 1) == doctest::Approx(h).epsilon(1e-9));
  }
}

TEST_CASE("stationary manufactured solution is preserved") {
  const auto sol = build(make(1, 0, -3.75, 2.5, 0));
  const auto p = problem_of(sol);
  const auto u = solve_ibvp(p, grid(160, 100), 0.0, 2.0);
  const double e0 = max_node_error(u.window(0, 0), sol.u);
  CHECK(e0 == 0.0);
  // spatial truncation only; no drift over time
  CHECK(max_node_error(u, sol.u) < 2e-4);
}

TEST_CASE("uniformly parabolic control run matches the heat kernel mode") {
  auto p = constant_problem(Domain::interval(0, 1), 1, 0, 0, Expr(0.0),
                            parse_expr("sin(3.141592653589793*x)"));
  SolveOptions o;
  o.unit_weight = true;
  const auto exact = parse_expr("exp(-9.869604401089358*t)*sin(3.141592653589793*x)");
  double prev = 0.0;
  for (int N : {20, 40, 80}) {
    const auto u = solve_ibvp(p, grid(N, N * N / 4, 1.0), 0.0, 0.5, o);
    const double e = max_node_error(u, exact);
    if (prev > 0.0) CHECK(std::log2(prev / e) > 1.8);
    prev = e;
  }
  CHECK(prev < 1e-3);
}

TEST_CASE("exponential shift for positive c") {
  // P(0.5) = -0.25 + 1, so u grows like e^{0.75 t}
  const auto sol = build(make(1, 0, 1.0, 0.5, 0));
  CHECK(sol.tau == doctest::Approx(-0.75));
  const auto p = problem_of(sol);
  const double e1 = max_node_error(solve_ibvp(p, grid(40, 100), 0.0, 1.0), sol.u);
  const double e2 = max_node_error(solve_ibvp(p, grid(80, 400), 0.0, 1.0), sol.u);
  CHECK(e2 < e1);
  CHECK(e2 < 5e-3);
}

TEST_CASE("discrete comparison") {
  // f >= 0, phi <= 0 forces u <= 0
  const auto p = constant_problem(Domain::interval(0, 1), 1.0, 0.7, -0.5,
                                  parse_expr("1 + sin(t)^2 + x"), parse_expr("-x*(1-x)"));
  const auto u = solve_ibvp(p, grid(40, 100), 0.0, 2.0);
  double top = -1.0;
  for (const auto& lv : u.levels) top = std::max(top, lv.maxCoeff());
  CHECK(top <= 1e-9);
  SUBCASE("with viscosity") {
    const auto v = solve_ibvp(p, grid(40, 100), 1e-2, 2.0);
    for (const auto& lv : v.levels) CHECK(lv.maxCoeff() <= 1e-9);
  }
}

TEST_CASE("incompatible lateral data is rejected") {
  // the trace is smooth by construction, so the gate only trips on a
  // threshold below the quadrature noise
  const auto p = constant_problem(Domain::interval(0, 1), 1, 0, -1, parse_expr("sin(40*t)"),
                                  Expr(0.0));
  SolveOptions o;
  o.compat_threshold = 1e-14;
  CHECK_THROWS_AS(solve_ibvp(p, grid(20, 50), 0.0, 1.0, o), GateError);
}

TEST_CASE("disk is not supported by the finite-difference solver") {
  const auto dom = Domain::disk(Point(0, 0), 1.0);
  const auto p = constant_problem(dom, 1, 0, -1, Expr(0.0), Expr(0.0));
  CHECK_THROWS_AS(solve_ibvp(p, grid(20, 10), 0.0, 1.0), ConfigError);
}

TEST_CASE("vanishing viscosity on the square-root case") {
  // The layer of width sqrt(delta) costs O(delta^{1/4}) against rho^{1/2};
  // differences saturate only once delta drops below the first cell's rho^2.
  const auto sol = build(make(1, 0, -2, 0.5, 0));
  DeltaSchedule s;
  s.max_stages = 16;
  const auto r = vanishing_viscosity(problem_of(sol), grid(40, 100), s, 1.0);
  CHECK(r.report.stabilized);
  CHECK(r.report.stage <= 13);
  CHECK(max_node_error(r.field, sol.u) < 3e-3);
  for (std::size_t j = 1; j < r.report.differences.size(); ++j)
    CHECK(r.report.differences[j] < r.report.differences[j - 1]);
}

TEST_CASE("elliptic limit") {
  const Domain dom = Domain::interval(0, 1);
  SUBCASE("fbar = cbar gives v = 1") {
    auto p = constant_problem(dom, 1.0, 0.5, -2.0, Expr(-2.0), Expr(0.0));
    const auto r = solve_elliptic_limit(p, grid(40, 10), DeltaSchedule{});
    CHECK(r.report.stabilized);
    CHECK((r.field.levels[0].array() - 1.0).abs().maxCoeff() < 1e-10);
  }
  SUBCASE("fbar = 0 gives v = 0") {
    auto p = constant_problem(dom, 1.0, 0.0, -2.0, Expr(0.0), Expr(0.0));
    const auto r = solve_elliptic_limit(p, grid(40, 10), DeltaSchedule{});
    CHECK(r.field.sup_abs() == 0.0);
  }
  SUBCASE("stationary manufactured case") {
    const auto sol = build(make(1, 0, -3.75, 2.5, 0));
    auto p = problem_of(sol);
    const auto r = solve_elliptic_limit(p, grid(160, 10), DeltaSchedule{});
    CHECK(r.report.stabilized);
    CHECK(max_node_error(r.field, sol.u) < 2e-4);
    CHECK(std::abs(r.field.levels[0](0)) < 1e-15);
  }
  SUBCASE("gate failure") {
    auto p = constant_problem(dom, 1.0, 0.0, 1.0, Expr(0.0), Expr(0.0));
    CHECK_THROWS_AS(solve_elliptic_limit(p, grid(20, 10), DeltaSchedule{}), GateError);
  }
}

TEST_CASE("long-time run") {
  const Domain dom = Domain::interval(0, 1);
  SUBCASE("zero data") {
    const auto p = constant_problem(dom, 1, 0, -2, Expr(0.0), Expr(0.0));
    const auto run = long_time_run(p, grid(20, 2), 0.0, 1.0, 5.0, 10);
    CHECK(run.windows.size() == 5);
    for (const auto& w : run.windows) {
      CHECK(w.level_count() == 11);
      CHECK(w.sup_abs() == 0.0);
    }
  }
  SUBCASE("time-independent data converges to the elliptic solve") {
    auto p = constant_problem(dom, 1, 0, -2, parse_expr("x*(1-x)"), Expr(0.0));
    const GridSpec g = grid(40, 2);
    const auto run = long_time_run(p, g, 0.0, 1.0, 12.0, 40);
    const auto v = solve_elliptic(p, g, 0.0);
    double prev = 1e300;
    for (std::size_t k = 6; k < run.windows.size(); ++k) {
      const auto& w = run.windows[k];
      const double d = (w.levels.back() - v.levels[0]).cwiseAbs().maxCoeff();
      CHECK(d < prev);
      prev = d;
    }
    CHECK(prev < 1e-6);
  }
  SUBCASE("limits are required") {
    auto p = constant_problem(dom, 1, 0, -2, Expr(0.0), Expr(0.0));
    p.coeffs.limits.reset();
    CHECK_THROWS_AS(long_time_run(p, grid(20, 2), 0.0, 1.0, 5.0, 10), ConfigError);
  }
}

TEST_CASE("half strip with exact artificial data") {
  ManufacturedSpec sp = make(1, 0, -2, 0.5, 0);
  sp.domain = Domain::half_strip(1.0);
  sp.psi0 = "1";
  const auto sol = build(sp);
  const auto p = problem_of(sol);
  const double e1 = max_node_error(solve_ibvp(p, grid(16, 20), 0.0, 0.5), sol.u);
  const double e2 = max_node_error(solve_ibvp(p, grid(32, 80), 0.0, 0.5), sol.u);
  CHECK(e2 < e1);
  CHECK(e2 < 2e-2);
}

TEST_CASE("field windows and differences") {
  const auto p = constant_problem(Domain::interval(0, 1), 1, 0, -1, Expr(1.0), Expr(0.0));
  const auto u = solve_ibvp(p, grid(20, 20), 0.0, 2.0);
  const auto w = u.window(0.5, 1.0);
  CHECK(w.level_count() == 6);
  CHECK(w.times.front() == doctest::Approx(0.5));
  CHECK(max_difference(u, u) == 0.0);
  const auto coarse = solve_ibvp(p, grid(10, 20), 0.0, 2.0);
  CHECK_THROWS_AS(max_difference(u, coarse), ArgumentError);
}
