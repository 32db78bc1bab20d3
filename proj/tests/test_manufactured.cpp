#include <doctest.h>

#include <cmath>
#include <random>

#include "degen/errors.hpp"
#include "degen/manufactured.hpp"

using namespace degen;

namespace {

ManufacturedSpec make(double a, double b, double c, double s, int m, const char* psi0 = "1") {
  ManufacturedSpec sp;
  sp.a = a;
  sp.b = b;
  sp.c = c;
  sp.s = s;
  sp.m = m;
  sp.psi0 = psi0;
  return sp;
}

// Lu by central differences in long double; independent of the symbolic path.
double fd_operator(const ManufacturedSolution& sol, double x, double t) {
  const long double h = 1e-4L;
  const auto u = [&](long double xx, long double tt) {
    return static_cast<long double>(sol.u(static_cast<double>(xx), 0.0, static_cast<double>(tt)));
  };
  const long double r = x * (1.0L - x);
  const long double u0 = u(x, t);
  const long double uxx = (u(x + h, t) - 2 * u0 + u(x - h, t)) / (h * h);
  const long double ux = (u(x + h, t) - u(x - h, t)) / (2 * h);
  const long double ut = (u(x, t + h) - u(x, t - h)) / (2 * h);
  const double a = sol.spec.a, b = sol.spec.b, c = sol.spec.c;
  return static_cast<double>(a * r * r * uxx + b * r * (1 - 2 * x) * ux + c * u0 - ut);
}

}  // namespace

TEST_CASE("decaying square-root case") {
  const auto sol = build(make(1, 0, -2, 0.5, 0));
  CHECK(sol.tau == doctest::Approx(2.25));
  for (double x : {0.1, 0.5, 0.93})
    for (double t : {0.0, 1.0}) {
      CHECK(sol.u(x, 0, t) == doctest::Approx(std::exp(-2.25 * t) * std::sqrt(x * (1 - x))));
      CHECK(sol.f(x, 0, t) == 0.0);
    }
  const auto samples = random_interior_samples(sol.spec.domain, 1000, 1);
  CHECK(residual_check(sol, samples) <= 1e-12);
  // tau + 0.1: the bracket becomes 0.1 u.
  CHECK(residual_check_shifted(sol, samples, 0.1) >= 0.01);
}

TEST_CASE("stationary case") {
  const auto sol = build(make(1, 0, -3.75, 2.5, 0));
  CHECK(sol.tau == 0.0);
  for (double x : {0.1, 0.5, 0.93}) {
    const double r = x * (1 - x);
    CHECK(sol.u(x, 0, 3.0) == doctest::Approx(std::pow(r, 2.5)));
    CHECK(sol.f(x, 0, 3.0) == doctest::Approx(-20.0 * std::pow(r, 3.5)));
  }
  CHECK(residual_check(sol, random_interior_samples(sol.spec.domain, 1000, 2)) <= 1e-12);
}

TEST_CASE("first corrector on the interval") {
  // Cancellation of the rho^{s+1} term forces psi_1 = 2s - 1 for psi_0 = 1.
  for (double s : {0.5, 1.25, 2.5, 0.3}) {
    const auto sol = build(make(1, 0, -2, s, 1));
    REQUIRE(sol.psi.size() == 2);
    for (double x : {0.2, 0.7}) CHECK(sol.psi[1](x, 0, 0) == doctest::Approx(2 * s - 1));
  }
  // With the opposite sign the residual no longer vanishes at order rho^{s+1}.
  const auto sol = build(make(1, 0, -2, 1.25, 1));
  ManufacturedSolution flipped = sol;
  const Expr r = sol.rho.expr();
  flipped.u = exp(-sol.tau * Expr::t()) * (pow(r, Expr(1.25)) - sol.psi[1] * pow(r, Expr(2.25)));
  flipped.field = SmoothField(flipped.u);
  CHECK(residual_check(flipped, random_interior_samples(sol.spec.domain, 100, 3)) > 1e-3);
}

TEST_CASE("residual matrix on the interval") {
  for (double s : {0.5, 1.25, 2.5})
    for (int m : {0, 1, 2})
      for (const char* psi0 : {"1", "1+x^2"}) {
        const auto sol = build(make(1, 0, -2, s, m, psi0));
        const double res = residual_check(sol, random_interior_samples(sol.spec.domain, 1000, 9));
        INFO("s=" << s << " m=" << m << " psi0=" << psi0);
        CHECK(res <= 1e-10);
        // Independent finite-difference cross-check at a few points.
        for (double x : {0.25, 0.6})
          CHECK(fd_operator(sol, x, 0.5) == doctest::Approx(sol.f(x, 0, 0.5)).epsilon(1e-5).scale(1));
      }
}

TEST_CASE("residuals on two-dimensional geometries") {
  for (const Domain& dom : {Domain::disk(Point(0.2, -0.1), 1.5), Domain::half_strip(1.0)})
    for (int m : {0, 1, 2}) {
      ManufacturedSpec sp = make(1.3, 0.4, -2, 1.25, m, "1+x1^2+x2");
      sp.domain = dom;
      const auto sol = build(sp);
      CHECK(residual_check(sol, random_interior_samples(dom, 500, 4)) <= 1e-10);
    }
}

TEST_CASE("f carries the factor rho^{s+m+1} with a bounded cofactor") {
  const auto sol = build(make(1, 0.5, -2, 1.25, 2, "1+x^2"));
  double near = 0.0;
  for (double x : {1e-6, 1e-4, 1 - 1e-6}) {
    const double r = x * (1 - x);
    const double ratio = sol.f(x, 0, 0.0) / std::pow(r, 1.25 + 3);
    CHECK(std::isfinite(ratio));
    CHECK(ratio == doctest::Approx(sol.f_factor(x, 0, 0)));
    near = std::max(near, std::abs(ratio));
  }
  CHECK(near < 1e6);
}

TEST_CASE("decay rate equals tau") {
  const auto sol = build(make(1, 0, -2, 1.25, 1, "1+x^2"));
  REQUIRE(sol.tau > 0.0);
  std::vector<double> ts, ls;
  for (int j = 0; j <= 10; ++j) {
    const double t = 0.5 * j;
    double sup = 0.0;
    for (int i = 1; i < 2000; ++i) sup = std::max(sup, std::abs(sol.u(i / 2000.0, 0, t)));
    ts.push_back(t);
    ls.push_back(std::log(sup));
  }
  double mt = 0, ml = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) mt += ts[i] / ts.size(), ml += ls[i] / ts.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) num += (ts[i] - mt) * (ls[i] - ml), den += (ts[i] - mt) * (ts[i] - mt);
  CHECK(num / den == doctest::Approx(-sol.tau).epsilon(1e-3));
}

TEST_CASE("spec validation and parsing") {
  const Domain I = Domain::interval(0, 1);
  const auto sp = parse_manufactured("ex11:a=1,b=0,c=-2,s=0.5,m=0", I);
  CHECK(sp.s == 0.5);
  CHECK(sp.c == -2.0);
  CHECK(parse_manufactured(sp.name(), I).name() == sp.name());
  CHECK(parse_manufactured("ex11:s=1.25,psi0=1+x^2", I).psi0 == "1+x^2");
  CHECK_THROWS_AS(parse_manufactured("ex11:s=2", I), ConfigError);
  CHECK_THROWS_AS(parse_manufactured("ex12:s=0.5", I), ConfigError);
  CHECK_THROWS_AS(parse_manufactured("ex11:q=1", I), ConfigError);
  CHECK_THROWS_AS(parse_manufactured("ex11:s=abc", I), ConfigError);
  // a (2s + i - 1) + b = 0 at i = 2 for a=1, s=0.5, b=-2.
  try {
    build(make(1, -2, -2, 0.5, 2));
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("i=2") != std::string::npos);
  }
}

TEST_CASE("regularity tags and boundary data") {
  auto tag = regularity_tag(build(make(1, 0, -2, 0.5, 0)));
  CHECK(tag.k == 0);
  CHECK(tag.alpha == doctest::Approx(0.5));
  CHECK(*tag.mu_plus == doctest::Approx(2.0));
  tag = regularity_tag(build(make(1, 0, -3.75, 2.5, 0)));
  CHECK(tag.k == 2);
  CHECK(*tag.mu_plus == doctest::Approx(2.5));
  tag = regularity_tag(build(make(1, 0, -2, 1.25, 0)));
  CHECK(tag.k == 1);
  CHECK(tag.alpha == doctest::Approx(0.25));
  CHECK(*tag.mu_plus == doctest::Approx(2.0));

  auto bd = boundary_data(build(make(1, 0, -2, 0.5, 0)));
  CHECK(bd.h == 0.0);
  CHECK(bd.normal_derivative_unbounded);
  CHECK_FALSE(bd.u1);
  CHECK(bd.phi(0.5, 0, 0) == doctest::Approx(0.5));
  for (double s : {2.5, 1.25}) {
    bd = boundary_data(build(make(1, 0, s == 2.5 ? -3.75 : -2, s, 0)));
    CHECK(bd.h == 0.0);
    REQUIRE(bd.u1);
    CHECK(*bd.u1 == 0.0);
    CHECK_FALSE(bd.normal_derivative_unbounded);
  }
}
