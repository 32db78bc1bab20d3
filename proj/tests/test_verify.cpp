#include <doctest.h>

#include <cmath>

#include "degen/errors.hpp"
#include "degen/manufactured.hpp"
#include "degen/solver.hpp"
#include "degen/verify.hpp"

using namespace degen;

namespace {

IbvpProblem constant_problem(double a, double b, double c, const Expr& f, const Expr& phi) {
  const auto dom = Domain::interval(0.0, 1.0);
  auto rho = make_defining_function(dom);
  return IbvpProblem{dom, rho, constant_coefficients(rho, 1, a, b, c, f), phi, std::nullopt};
}

IbvpProblem decaying_problem(double s) {
  ManufacturedSpec sp;
  sp.s = s;
  const auto sol = build(sp);
  return IbvpProblem{sp.domain, sol.rho, sol.coeffs, boundary_data(sol).phi, sol.u};
}

GridSpec grid(int N, int M, double gamma = 2.0) {
  GridSpec g;
  g.N = N;
  g.M = M;
  g.gamma = gamma;
  return g;
}

const Point origin = Point::Zero();

}  // namespace

TEST_CASE("max principle on solver output") {
  const auto p = constant_problem(1.0, 0.0, -1.0, 0.0, -1.0);
  const auto run = solve_ibvp(p, grid(40, 100), 0.0, 1.0);
  const auto rep = check_max_principle(run, p);
  CHECK(rep.verdict == Verdict::pass);
  CHECK(rep.max_value < 0.0);
  // the continuous solution is -e^{-t}; the scheme stays below zero
  CHECK(rep.max_value <= -std::exp(-1.0) + 1e-2);

  const auto zero = constant_problem(1.0, 0.0, -1.0, 0.0, 0.0);
  const auto r0 = check_max_principle(solve_ibvp(zero, grid(20, 20), 0.0, 1.0), zero);
  CHECK(r0.verdict == Verdict::pass);
  CHECK(r0.max_value == 0.0);

  const auto pos = constant_problem(1.0, 0.0, -1.0, 0.0, 1.0);
  const auto rp = check_max_principle(solve_ibvp(pos, grid(20, 20), 0.0, 1.0), pos);
  CHECK(rp.verdict == Verdict::not_applicable);
  CHECK(rp.reason.find("boundary data") != std::string::npos);

  const auto negf = constant_problem(1.0, 0.0, -1.0, -1.0, 0.0);
  const auto rf = check_max_principle(solve_ibvp(negf, grid(20, 20), 0.0, 1.0), negf);
  CHECK(rf.verdict == Verdict::not_applicable);
}

TEST_CASE("max principle detects a positive value and skips cross terms") {
  const auto p = constant_problem(1.0, 0.0, -1.0, 0.0, 0.0);
  auto run = solve_ibvp(p, grid(20, 10), 0.0, 1.0);
  run.levels.back()(10) = 1e-3;
  CHECK(check_max_principle(run, p).verdict == Verdict::fail);

  const auto dom = Domain::half_strip(1.0);
  auto rho = make_defining_function(dom);
  auto coeffs = constant_coefficients(rho, 2, 1.0, 0.0, -1.0);
  coeffs.a[1] = 0.2;
  coeffs.a[2] = 0.2;
  const IbvpProblem q{dom, rho, coeffs, 0.0, Expr(0.0)};
  SpaceTimeField f;
  f.dim = 2;
  f.x1 = {-1.0, 0.0, 1.0};
  f.x2 = {0.0, 0.5, 1.0};
  f.times = {0.0};
  f.levels = {Eigen::VectorXd::Zero(9)};
  const auto rep = check_max_principle(f, q);
  CHECK(rep.verdict == Verdict::not_applicable);
  CHECK(rep.reason == "cross-diffusion present");
}

TEST_CASE("L-infinity bound from the exponential comparison function") {
  SUBCASE("c = -2, f = 1: constant at most 1") {
    const auto p = constant_problem(1.0, 0.0, -2.0, 1.0, 0.0);
    const auto run = solve_ibvp(p, grid(80, 200), 0.0, 4.0);
    const auto rep = check_linfty_bound(run, p, 0.0);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.C <= 1.0);
    CHECK(rep.K_F <= 1.0);
    CHECK(rep.r >= 1.0);
    CHECK(rep.sup_u <= 0.5 + 1e-9);
    CHECK(rep.sup_u > 0.49);
    CHECK(rep.F == doctest::Approx(1.0));
    CHECK(rep.worst_ratio <= 1.0);
  }
  SUBCASE("slab of width equal to the domain gives a larger constant") {
    // r = 1, offset 0: the smallest admissible mu exceeds the one for r = 1.5
    const auto p = constant_problem(1.0, 0.0, -2.0, 1.0, 0.0);
    const auto run = solve_ibvp(p, grid(40, 40), 0.0, 1.0);
    const auto rep = check_linfty_bound(run, p, 0.0);
    CHECK(rep.r > 1.0);
  }
  SUBCASE("zero data") {
    const auto p = constant_problem(1.0, 0.0, -2.0, 0.0, 0.0);
    const auto rep = check_linfty_bound(solve_ibvp(p, grid(20, 20), 0.0, 1.0), p, 0.0);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.sup_bound == 0.0);
    CHECK(rep.sup_u == 0.0);
  }
  SUBCASE("manufactured decaying case") {
    const auto p = decaying_problem(0.5);
    const auto run = solve_ibvp(p, grid(80, 200), 0.0, 1.0);
    const auto rep = check_linfty_bound(run, p, 0.0);
    CHECK(rep.verdict == Verdict::pass);
    CHECK(rep.Phi == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(rep.F == 0.0);
    CHECK(rep.sup_u <= rep.sup_bound);
  }
  SUBCASE("hypothesis c < c0 fails") {
    const auto p = constant_problem(1.0, 0.0, 1.0, 0.0, 0.0);
    const auto rep = check_linfty_bound(solve_ibvp(p, grid(20, 20), 0.0, 1.0), p, 0.5);
    CHECK(rep.verdict == Verdict::not_applicable);
    CHECK(check_linfty_bound(solve_ibvp(p, grid(20, 20), 0.0, 1.0), p, -1.0).verdict ==
          Verdict::not_applicable);
  }
}

TEST_CASE("time-independent barrier") {
  const auto p = constant_problem(1.0, 0.0, -2.0, 0.0, 0.0);
  const auto cert =
      find_barrier(p.coeffs, p.rho, p.domain, 0.5, origin, BarrierMode::time_independent);
  REQUIRE(cert.found);
  CHECK(cert.K == 0.0);
  CHECK(cert.C0 > 0.0);
  CHECK(cert.onset == 0.0);
  CHECK(cert.r == doctest::Approx(1.0));
  CHECK(cert.lattice.size() == 512);
  CHECK(recheck_barrier(cert, p.coeffs, p.rho) >= 0.0);

  const auto bad =
      find_barrier(p.coeffs, p.rho, p.domain, 3.0, origin, BarrierMode::time_independent);
  CHECK_FALSE(bad.found);
  CHECK(bad.C0 <= 0.0);
  CHECK(bad.diagnostic.find("P(mu)") != std::string::npos);
  CHECK(bad.worst(0) < 0.01);
}

TEST_CASE("barrier sharpness follows the positive root") {
  for (double c : {-2.0, -3.75, -6.0}) {
    const auto p = constant_problem(1.0, 0.0, c, 0.0, 0.0);
    const double root = 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * c));
    const auto below =
        find_barrier(p.coeffs, p.rho, p.domain, root - 0.1, origin, BarrierMode::time_independent);
    const auto above =
        find_barrier(p.coeffs, p.rho, p.domain, root + 0.1, origin, BarrierMode::time_independent);
    CHECK(below.found);
    CHECK(recheck_barrier(below, p.coeffs, p.rho) >= 0.0);
    CHECK_FALSE(above.found);
  }
}

TEST_CASE("time-independent barrier onset for decaying coefficient deviation") {
  auto p = constant_problem(1.0, 0.0, -2.0, 0.0, 0.0);
  p.coeffs.c = -2.0 + 3.0 * exp(-Expr::t());
  const auto cert =
      find_barrier(p.coeffs, p.rho, p.domain, 0.5, origin, BarrierMode::time_independent);
  REQUIRE(cert.found);
  CHECK(cert.onset >= 1.0);
  CHECK(cert.onset <= 4.0);

  auto nolim = p.coeffs;
  nolim.limits.reset();
  CHECK_THROWS_AS(
      find_barrier(nolim, p.rho, p.domain, 0.5, origin, BarrierMode::time_independent),
      ConfigError);
}

TEST_CASE("laplace barrier") {
  const auto p = constant_problem(1.0, 0.0, -2.0, 0.0, 0.0);
  const auto cert = find_barrier(p.coeffs, p.rho, p.domain, 0.5, origin, BarrierMode::laplace);
  REQUIRE(cert.found);
  CHECK(cert.K == 0.0);
  CHECK(cert.C0 >= 0.0);
  CHECK(recheck_barrier(cert, p.coeffs, p.rho) >= 0.0);
  CHECK_THROWS_AS(find_barrier(p.coeffs, p.rho, p.domain, 1.5, origin, BarrierMode::laplace),
                  ArgumentError);
  CHECK_THROWS_AS(find_barrier(p.coeffs, p.rho, p.domain, 0.0, origin, BarrierMode::parabolic),
                  ArgumentError);

  // Half strip: the flat face at x0 = 0
  const auto dom = Domain::half_strip(1.0);
  const auto rho = make_defining_function(dom);
  const auto co = constant_coefficients(rho, 2, 1.0, 0.0, -2.0);
  BarrierOptions small;
  small.lattice_2d = 40;
  const auto c2 = find_barrier(co, rho, dom, 0.5, origin, BarrierMode::laplace, small);
  REQUIRE(c2.found);
  CHECK(recheck_barrier(c2, co, rho) >= 0.0);
}

TEST_CASE("parabolic barrier picks the smallest time weight") {
  const auto p = constant_problem(1.0, 0.0, -2.0, 0.0, 0.0);
  const auto easy = find_barrier(p.coeffs, p.rho, p.domain, 0.5, origin, BarrierMode::parabolic);
  REQUIRE(easy.found);
  CHECK(easy.A == 1.0);
  CHECK(recheck_barrier(easy, p.coeffs, p.rho) >= 0.0);

  // mu = 3 lies beyond the root; a larger time weight compensates
  const auto hard = find_barrier(p.coeffs, p.rho, p.domain, 3.0, origin, BarrierMode::parabolic);
  REQUIRE(hard.found);
  CHECK(hard.A > 1.0);
  CHECK(recheck_barrier(hard, p.coeffs, p.rho) >= 0.0);

  // time-dependent coefficients are sampled at 64 times
  auto q = p;
  q.coeffs.c = -2.0 + Expr::t();
  const auto tdep = find_barrier(q.coeffs, q.rho, q.domain, 0.5, origin, BarrierMode::parabolic);
  REQUIRE(tdep.found);
  CHECK(tdep.lattice.size() == 512 * 64);
  CHECK(recheck_barrier(tdep, q.coeffs, q.rho) >= 0.0);
}

TEST_CASE("barrier mode names") {
  for (auto m : {BarrierMode::parabolic, BarrierMode::laplace, BarrierMode::time_independent}) {
    CHECK(parse_barrier_mode(to_string(m)) == m);
  }
  CHECK_THROWS_AS(parse_barrier_mode("elliptic"), ConfigError);
}

TEST_CASE("rate fits") {
  std::vector<double> T;
  std::vector<double> e;
  std::vector<double> q;
  std::vector<double> Tq;
  for (int i = 0; i < 10; ++i) {
    T.push_back(i);
    e.push_back(3.0 * std::exp(-1.5 * i));
    Tq.push_back(std::ldexp(1.0, i) - 1.0);
    q.push_back(std::pow(1.0 + Tq.back(), -2.0));
  }
  const auto fe = fit_rate(T, e);
  CHECK(fe.model == "exponential");
  CHECK(fe.accepted);
  CHECK(fe.rate == doctest::Approx(1.5));
  const auto fq = fit_rate(Tq, q);
  CHECK(fq.model == "polynomial");
  CHECK(fq.accepted);
  CHECK(fq.rate == doctest::Approx(2.0));
  const auto fz = fit_rate(T, std::vector<double>(10, 0.0));
  CHECK(fz.model == "zero");
  CHECK_THROWS_AS(fit_rate(T, std::vector<double>(3, 1.0)), ArgumentError);
}

TEST_CASE("decay certificate scales like the manufactured rate") {
  for (double s : {0.5, 1.25}) {
    ManufacturedSpec sp;
    sp.s = s;
    const auto sol = build(sp);
    const IbvpProblem p{sp.domain, sol.rho, sol.coeffs, boundary_data(sol).phi, sol.u};
    const auto run = solve_ibvp(p, grid(80, 1600), 0.0, 4.0);
    const auto rep = decay_certificate(run, {Point(0.0, 0.0), Point(1.0, 0.0)}, 0.5);
    CHECK(rep.window_C.size() == 4);
    CHECK(rep.bounded);
    CHECK(rep.decaying);
    CHECK(rep.fitted_rate == doctest::Approx(sol.tau).epsilon(0.05));
  }
  const auto zero = constant_problem(1.0, 0.0, -1.0, 0.0, 0.0);
  const auto rz = decay_certificate(solve_ibvp(zero, grid(20, 20), 0.0, 2.0), {origin}, 0.5);
  for (double v : rz.sup_quotient) CHECK(v == 0.0);
  CHECK(rz.decaying);
  CHECK_THROWS_AS(decay_certificate(solve_ibvp(zero, grid(20, 20), 0.0, 1.0), {}, 0.5),
                  ArgumentError);
}

TEST_CASE("long-time report: decaying case rate") {
  const auto p = decaying_problem(0.5);
  const auto run = long_time_run(p, grid(80, 2), 0.0, 1.0, 8.0, 400);
  const auto rep = long_time_report(run, nullptr, p.rho, {});
  CHECK(rep.T.size() == 8);
  CHECK(rep.rate.model == "exponential");
  CHECK(rep.rate.accepted);
  CHECK(rep.rate.rate == doctest::Approx(2.25).epsilon(0.05 / 2.25));
}

TEST_CASE("long-time report: time-independent data converge to the elliptic solve") {
  const auto dom = Domain::interval(0.0, 1.0);
  auto rho = make_defining_function(dom);
  const IbvpProblem p{dom, rho, constant_coefficients(rho, 1, 1.0, 0.0, -2.0, rho.expr()), 0.0,
                      std::nullopt};
  DeltaSchedule schedule;
  schedule.max_stages = 12;
  const auto v = solve_elliptic_limit(p, grid(80, 2), schedule);
  REQUIRE(v.report.stabilized);
  CHECK(v.report.stage == 8);
  const auto run = long_time_run(p, grid(80, 2), v.field.delta, 1.0, 12.0, 100);
  ConvergenceOptions c01;
  c01.cls = NormClass::holder;
  c01.k = 0;
  c01.alpha = 0.5;
  c01.tail = 10;
  const auto rep = long_time_report(run, &v.field, rho, {c01});
  REQUIRE(rep.traces.size() == 1);
  const auto& tr = rep.traces.front();
  CHECK(tr.windows.size() == 12);
  CHECK(tr.decreasing);
  CHECK(tr.converging);
  CHECK(tr.windows.back().value < 1e-3);
  for (std::size_t i = 3; i < rep.linf.size(); ++i) CHECK(rep.linf[i] < rep.linf[i - 1]);

  // u itself does not decay: its window values settle at the profile's norm
  const auto self = long_time_report(run, nullptr, rho, {c01});
  CHECK(self.traces.front().windows.back().value > 0.01);
  CHECK_FALSE(self.traces.front().converging);
}
