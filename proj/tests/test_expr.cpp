#include <doctest.h>

#include <cmath>
#include <random>

#include "degen/errors.hpp"
#include "degen/expr.hpp"

using namespace degen;

TEST_CASE("expr evaluates and differentiates polynomials") {
  const Expr x = Expr::x1();
  const Expr e = 3.0 * x * x - 2.0 * x + 1.0;
  CHECK(e(2.0, 0.0, 0.0) == doctest::Approx(9.0));
  CHECK(e.diff(Var::x1)(2.0, 0.0, 0.0) == doctest::Approx(10.0));
  CHECK(e.diff(Var::x1).diff(Var::x1).is_constant());
  CHECK(e.diff(Var::x2).is_constant());
  CHECK(e.diff(Var::x2).constant_value() == 0.0);
}

TEST_CASE("expr chain rule against central differences") {
  const Expr e = parse_expr("exp(-t)*sin(x1)*sqrt(1+x2^2) + (x1*x2)^1.5 / (2 + cos(t))");
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.2, 1.0);
  const Var vars[3] = {Var::x1, Var::x2, Var::t};
  for (int k = 0; k < 50; ++k) {
    const double p[3] = {u(rng), u(rng), u(rng)};
    for (int v = 0; v < 3; ++v) {
      const double hstep = 1e-6;
      double lo[3] = {p[0], p[1], p[2]};
      double hi[3] = {p[0], p[1], p[2]};
      lo[v] -= hstep;
      hi[v] += hstep;
      const double fd = (e(hi[0], hi[1], hi[2]) - e(lo[0], lo[1], lo[2])) / (2 * hstep);
      CHECK(e.diff(vars[v])(p[0], p[1], p[2]) == doctest::Approx(fd).epsilon(1e-7));
    }
  }
}

TEST_CASE("parser precedence and names") {
  CHECK(parse_expr("-2^2")(0, 0, 0) == doctest::Approx(-4.0));
  CHECK(parse_expr("2^3^2")(0, 0, 0) == doctest::Approx(512.0));
  CHECK(parse_expr("2^-1")(0, 0, 0) == doctest::Approx(0.5));
  CHECK(parse_expr("x*y + t")(2, 3, 4) == doctest::Approx(10.0));
  CHECK(parse_expr("cos(pi)")(0, 0, 0) == doctest::Approx(-1.0));
  const SymbolTable sym{{"rho", Expr::x1() * (1.0 - Expr::x1())}};
  CHECK(parse_expr("rho^2", sym)(0.5, 0, 0) == doctest::Approx(0.0625));
}

TEST_CASE("parser errors carry a column") {
  try {
    parse_expr("1 + * 2");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(e.column() == 5);
  }
  CHECK_THROWS_AS(parse_expr("foo(x)"), ParseError);
  CHECK_THROWS_AS(parse_expr("(x"), ParseError);
  CHECK_THROWS_AS(parse_expr("x y"), ParseError);
}

TEST_CASE("printed expressions parse back to the same function") {
  const Expr e = parse_expr("exp(-2.25*t)*(x*(1-x))^0.5 - 3e-3*sin(x2)/(1+t)");
  const Expr back = parse_expr(e.to_string());
  for (double x : {0.1, 0.4, 0.9})
    for (double t : {0.0, 0.7}) CHECK(back(x, 0.3, t) == e(x, 0.3, t));
}
