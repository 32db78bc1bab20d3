#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "degen/boundary_trace.hpp"
#include "degen/errors.hpp"

using namespace degen;

namespace {

CoefficientSet scalar_set(int dim, const Expr& c, const Expr& f) {
  CoefficientSet k;
  k.dim = dim;
  k.c = c;
  k.f = f;
  return k;
}

BoundaryPoint origin_point() {
  const Domain I = Domain::interval(0.0, 1.0);
  return boundary_points(I, make_defining_function(I), 2)[0];
}

BoundaryPoint face_point(double x1) {
  const Domain G = Domain::half_strip(1.0);
  return boundary_point_at(G, make_defining_function(G), x1);
}

}  // namespace

TEST_CASE("trace_h closed forms") {
  const auto times = uniform_times(2.0, 21);
  auto tr = trace_h(scalar_set(1, 0.0, 0.0), Expr(0.7), origin_point(), times);
  for (int j = 0; j < tr.time_count(); ++j) CHECK(tr.values(0, j) == 0.7);

  tr = trace_h(scalar_set(1, -1.0, 1.0), Expr(0.0), origin_point(), uniform_times(1.0, 11));
  CHECK(std::abs(tr.values(0, 10) - (std::exp(-1.0) - 1.0)) < 1e-10);
  CHECK(tr.values(0, 10) == doctest::Approx(-0.632121).epsilon(1e-6));
  CHECK(tr.achieved <= 1e-10);
}

TEST_CASE("trace_h with time-dependent coefficient against composite Simpson") {
  const Expr t = Expr::t();
  const auto tr = trace_h(scalar_set(1, -1.0 - exp(-t), 1.0), Expr(0.0), origin_point(),
                          uniform_times(1.0, 5));
  // C(t) = -t - (1 - e^{-t}); h(1) = -int_0^1 exp(C(1) - C(s)) ds.
  const auto C = [](double s) { return -s - (1.0 - std::exp(-s)); };
  const int n = 1000000;
  const double hstep = 1.0 / n;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::exp(C(1.0) - C(i * hstep));
  }
  const double reference = -sum * hstep / 3.0;
  CHECK(std::abs(tr.values(0, 4) - reference) < 1e-10);
}

TEST_CASE("compatibility residual") {
  const auto times = uniform_times(1.0, 101);
  auto tr = trace_h(scalar_set(1, -1.0, 1.0), Expr(0.0), origin_point(), times);
  CHECK(compatibility_residual(tr) <= 1e-7);
  // Closed form h = e^{-t} - 1 placed on the lattice directly.
  BoundaryTrace exact = tr;
  for (int j = 0; j < exact.time_count(); ++j) exact.values(0, j) = std::exp(-times[j]) - 1.0;
  CHECK(compatibility_residual(exact) <= 1e-7);

  tr = trace_h(scalar_set(1, 0.0, 0.0), Expr(0.3), origin_point(), times);
  CHECK(compatibility_residual(tr) == 0.0);

  // Random polynomial coefficients, refinement study: fourth-order decay.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const Expr s = Expr::t();
  for (int trial = 0; trial < 3; ++trial) {
    const Expr c = -1.0 + 0.5 * U(rng) * s + 0.2 * U(rng) * s * s;
    const Expr f = U(rng) + U(rng) * s + U(rng) * s * s * s;
    const auto coarse = trace_h(scalar_set(1, c, f), Expr(U(rng)), origin_point(),
                                uniform_times(1.0, 101), 1e-10);
    const auto fine = trace_h(scalar_set(1, c, f), Expr(coarse.values(0, 0)), origin_point(),
                              uniform_times(1.0, 1001), 1e-10);
    const double rc = compatibility_residual(coarse);
    const double rf = compatibility_residual(fine);
    CHECK(rf <= 1e-8);
    CHECK(rc > 20.0 * rf);
  }
  CHECK_THROWS_AS(compatibility_residual(trace_h(scalar_set(1, 0.0, 0.0), Expr(0.0),
                                                 origin_point(), uniform_times(1.0, 2))),
                  ArgumentError);
}

TEST_CASE("trace_h is linear and restarts consistently") {
  const Expr t = Expr::t();
  const Expr c = -1.0 + 0.3 * sin(t);
  const Expr f1 = 1.0 + t;
  const Expr f2 = cos(2.0 * t);
  const auto times = uniform_times(2.0, 9);
  const auto a = trace_h(scalar_set(1, c, f1), Expr(0.4), origin_point(), times);
  const auto b = trace_h(scalar_set(1, c, f2), Expr(-1.1), origin_point(), times);
  const auto ab = trace_h(scalar_set(1, c, f1 + f2), Expr(0.4 - 1.1), origin_point(), times);
  CHECK((ab.values - a.values - b.values).cwiseAbs().maxCoeff() <= 2e-10);

  // Restart at T = 1 from h(1) with the coefficients shifted in time.
  const auto first = trace_h(scalar_set(1, c, f1), Expr(0.4), origin_point(), uniform_times(2.0, 3));
  const Expr tt = t + 1.0;
  const Expr c_shift = -1.0 + 0.3 * sin(tt);
  const Expr f_shift = 1.0 + tt;
  const auto second = trace_h(scalar_set(1, c_shift, f_shift), Expr(first.values(0, 1)),
                              origin_point(), uniform_times(1.0, 2));
  CHECK(std::abs(second.values(0, 1) - first.values(0, 2)) <= 2e-10);
}

TEST_CASE("quadrature failure is reported") {
  const Expr t = Expr::t();
  CHECK_THROWS_AS(trace_h(scalar_set(1, 0.0, sin(1.0 / (t + 1e-9))), Expr(0.0), origin_point(),
                          uniform_times(1.0, 3), 1e-14),
                  NumericError);
}

TEST_CASE("ladder coefficients") {
  const Domain G = Domain::half_strip(1.0);
  CoefficientSet k = scalar_set(2, -10.0, 0.0);
  k.b = {Expr(0.5), Expr(2.0)};
  const auto l0 = ladder_coefficients(k, G, 0);
  CHECK(l0.c.constant_value() == -10.0);
  CHECK(l0.b[1].constant_value() == 2.0);
  CHECK(ladder_coefficients(k, G, 3).c.constant_value() == doctest::Approx(2.0));
  k.b = {Expr(0.5), Expr(0.0)};
  CHECK(ladder_coefficients(k, G, 1).c.constant_value() == doctest::Approx(-10.0));
  CHECK_THROWS_AS(ladder_coefficients(k, G, -1), ArgumentError);
  CHECK_THROWS_AS(ladder_coefficients(k, Domain::interval(0, 1), 1), ConfigError);

  // Q^{(1)}(mu) = Q(mu + 1) for the shifted operator.
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> U(-2.0, 2.0), P(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    CoefficientSet c = scalar_set(2, U(rng), 0.0);
    const double off = 0.2 * U(rng);
    c.a = {Expr(P(rng)), Expr(off), Expr(off), Expr(P(rng))};
    c.b = {Expr(U(rng)), Expr(U(rng))};
    c.limits = LimitCoefficients{c.a, c.b, c.c, Expr(0.0)};
    const auto l1 = ladder_coefficients(c, G, 1);
    CoefficientSet s = c;
    s.b = l1.b;
    s.c = l1.c;
    s.limits = LimitCoefficients{s.a, s.b, s.c, Expr(0.0)};
    const double mu = U(rng);
    CHECK(interior_poly(s, G, Point(0.1, 0.2), mu) ==
          doctest::Approx(interior_poly(c, G, Point(0.1, 0.2), mu + 1.0)));
  }
}

TEST_CASE("first-order trace") {
  const Domain G = Domain::half_strip(1.0);
  const auto times = uniform_times(1.0, 11);
  // phi = x_n, c = -1, b = 0, f = 0: u1 = e^{-t}.
  const auto tr = trace_u1(scalar_set(2, -1.0, 0.0), Expr::x2(), G, face_point(0.2), times);
  for (int j = 0; j < tr.time_count(); ++j)
    CHECK(std::abs(tr.values(0, j) - std::exp(-times[j])) < 1e-10);
  CHECK(tr.level == 1);

  // b = 0, x-independent c, f: source reduces to d_n f (here 0).
  const Expr t = Expr::t();
  const auto plain = trace_u1(scalar_set(2, -1.0 - 0.5 * sin(t), 2.0 + t), 1.0 + 3.0 * Expr::x2(),
                              G, face_point(0.0), times);
  const auto same = trace_h(scalar_set(2, -1.0 - 0.5 * sin(t), 0.0), Expr(3.0), face_point(0.0),
                            times);
  CHECK((plain.values - same.values).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(trace_u1(scalar_set(2, -1.0, 0.0), sqrt(Expr::x2()), G, face_point(0.0), times),
                  ConfigError);
  CHECK_THROWS_AS(trace_u1(scalar_set(1, -1.0, 0.0), Expr::x2(), Domain::interval(0, 1),
                           origin_point(), times),
                  ConfigError);
}

TEST_CASE("traces match an exact variable-coefficient solution") {
  const Domain G = Domain::half_strip(1.0);
  const DefiningFunction rho = make_defining_function(G);
  const Expr x1 = Expr::x1(), x2 = Expr::x2(), t = Expr::t();
  CoefficientSet k;
  k.dim = 2;
  k.a = {1.0 + 0.2 * x1 * x1, 0.1 * x2, 0.1 * x2, 1.5 + 0.1 * sin(t)};
  k.b = {0.4 + 0.3 * x2, 0.5 * x1 - 0.2};
  k.c = -1.5 + 0.3 * x1 + 0.4 * x2 - 0.2 * exp(-t);
  const Expr u = exp(-0.5 * t) * (1.0 + x1 * x1 + 0.7 * x2 + x1 * x2 - 0.3 * x2 * x2 * x2) +
                 0.2 * sin(t + x1) * x2 * x2;
  k.f = operator_expr(k, rho, u);
  const Expr phi = u;  // evaluated at t = 0 by the traces
  const auto times = uniform_times(1.0, 41);
  for (double s : {-0.5, 0.25}) {
    const BoundaryPoint p = face_point(s);
    const auto h = trace_h(k, phi, p, times, 1e-11);
    const auto dh = trace_h_tangential(k, phi, p, times, 1e-11);
    const auto u1 = trace_u1(k, phi, G, p, times, 1e-10);
    const Expr du1 = u.diff(Var::x1);
    const Expr dun = u.diff(Var::x2);
    for (int j = 0; j < 41; ++j) {
      CHECK(std::abs(h.values(0, j) - u(p.x, times[j])) < 1e-10);
      CHECK(std::abs(dh.values(0, j) - du1(p.x, times[j])) < 1e-9);
      CHECK(std::abs(u1.values(0, j) - dun(p.x, times[j])) < 1e-9);
    }
    CHECK(compatibility_residual(h) < 1e-6);
    CHECK(compatibility_residual(dh) < 1e-6);
    CHECK(compatibility_residual(u1) < 1e-6);
    for (int nu = 2; nu <= 3; ++nu) {
      const auto lad = trace_ladder(k, G, u, nu, p, times, 1e-10);
      Expr w = u;
      for (int q = 0; q < nu; ++q) w = w.diff(Var::x2);
      for (int j = 0; j < 41; j += 8) CHECK(std::abs(lad.values(0, j) - w(p.x, times[j])) < 1e-8);
    }
  }
  // The level-nu equation holds identically in the interior.
  for (int nu = 0; nu <= 3; ++nu) {
    const auto lc = ladder_coefficients(k, G, nu);
    CoefficientSet kn = k;
    kn.b = lc.b;
    kn.c = lc.c;
    Expr w = u;
    for (int q = 0; q < nu; ++q) w = w.diff(Var::x2);
    const Expr res = operator_expr(kn, rho, w) - ladder_source(k, G, u, nu);
    for (const Point& x : interior_lattice(G, 25)) CHECK(std::abs(res(x, 0.37)) < 1e-10);
  }
}

TEST_CASE("boundary limit") {
  const Expr t = Expr::t();
  CoefficientSet k = scalar_set(1, -1.0, 1.0);
  k.limits = LimitCoefficients{k.a, k.b, Expr(-1.0), Expr(1.0)};
  const auto times = uniform_times(12.0, 1201);
  auto tr = trace_h(k, Expr(0.0), origin_point(), times);
  auto rep = boundary_limit(k, tr, {2.0, 5.0, 10.0});
  CHECK(rep.limit[0] == doctest::Approx(-1.0));
  CHECK(rep.windows[2].deviation == doctest::Approx(std::exp(-10.0)).epsilon(1e-6));
  CHECK(rep.decaying);

  CoefficientSet zero = scalar_set(1, -0.5, 0.0);
  zero.limits = LimitCoefficients{k.a, k.b, Expr(-0.5), Expr(0.0)};
  rep = boundary_limit(zero, trace_h(zero, Expr(2.0), origin_point(), times), {0.0, 4.0, 8.0});
  CHECK(rep.limit[0] == 0.0);
  CHECK(rep.windows[0].deviation == doctest::Approx(2.0));
  CHECK(rep.decaying);

  // c = -1 + e^{-t}/2, f = 1 + e^{-t}: limit -1; oracle: explicit quadrature.
  CoefficientSet d = scalar_set(1, -1.0 + 0.5 * exp(-t), 1.0 + exp(-t));
  d.limits = LimitCoefficients{k.a, k.b, Expr(-1.0), Expr(1.0)};
  tr = trace_h(d, Expr(0.0), origin_point(), uniform_times(10.0, 11));
  const auto C = [](double s) { return -s + 0.5 * (1.0 - std::exp(-s)); };
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = 10.0 * i / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * std::exp(C(10.0) - C(s)) * (1.0 + std::exp(-s));
  }
  const double h10 = -sum * (10.0 / n) / 3.0;
  CHECK(std::abs(tr.values(0, 10) - h10) < 1e-9);
  rep = boundary_limit(d, tr, {10.0});
  CHECK(std::abs(h10 + 1.0) < 1e-3);
  CHECK(rep.windows[0].deviation < 1e-3);

  CoefficientSet bad = scalar_set(1, 0.0, 1.0);
  bad.limits = LimitCoefficients{k.a, k.b, Expr(0.0), Expr(1.0)};
  CHECK_THROWS_AS(boundary_limit(bad, tr, {1.0}), GateError);
}

TEST_CASE("trace csv export") {
  const auto tr = trace_h(scalar_set(1, -1.0, 1.0), Expr(0.0), origin_point(), uniform_times(1, 3));
  std::ostringstream os;
  write_trace_csv(os, tr);
  const std::string text = os.str();
  CHECK(text.rfind("param,t,value,level\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}
