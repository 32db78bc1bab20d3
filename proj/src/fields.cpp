#include "degen/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {
constexpr Var kSpace[2] = {Var::x1, Var::x2};
}  // namespace

Eigen::Matrix2d CoefficientSet::a_at(const Point& x, double t) const {
  Eigen::Matrix2d m = Eigen::Matrix2d::Zero();
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m(i, j) = a[2 * i + j](x, t);
  return m;
}

Eigen::Vector2d CoefficientSet::b_at(const Point& x, double t) const {
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int i = 0; i < dim; ++i) v(i) = b[i](x, t);
  return v;
}

bool CoefficientSet::time_independent() const {
  auto indep = [](const Expr& e) { return !e.depends_on(Var::t); };
  return std::all_of(a.begin(), a.end(), indep) && std::all_of(b.begin(), b.end(), indep) &&
         indep(c) && indep(f);
}

CoefficientSet CoefficientSet::limit_problem() const {
  if (!limits) throw ConfigError("coefficient limits are not declared");
  CoefficientSet out = *this;
  out.a = limits->a;
  out.b = limits->b;
  out.c = limits->c;
  out.f = limits->f;
  return out;
}

CoefficientSet constant_coefficients(const DefiningFunction& rho, int dim, double a, double b,
                                     double c, const Expr& f) {
  CoefficientSet k;
  k.dim = dim;
  k.a = {Expr(a), Expr(0.0), Expr(0.0), Expr(dim == 2 ? a : 1.0)};
  for (int i = 0; i < dim; ++i) k.b[i] = b * rho.gradient_expr(i);
  k.c = Expr(c);
  k.f = f;
  k.lambda = a;
  k.Lambda = a;
  LimitCoefficients lim;
  lim.a = k.a;
  lim.b = k.b;
  lim.c = k.c;
  lim.f = f.depends_on(Var::t) ? Expr(0.0) : f;
  k.limits = lim;
  return k;
}

SmoothField::SmoothField(Expr u) : u_(std::move(u)) {
  for (int i = 0; i < 2; ++i) grad_[i] = u_.diff(kSpace[i]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) hess_[2 * i + j] = grad_[i].diff(kSpace[j]);
  dt_ = u_.diff(Var::t);
}

Eigen::Vector2d SmoothField::gradient(const Point& x, double t) const {
  return {grad_[0](x, t), grad_[1](x, t)};
}

Eigen::Matrix2d SmoothField::hessian(const Point& x, double t) const {
  Eigen::Matrix2d h;
  h << hess_[0](x, t), hess_[1](x, t), hess_[2](x, t), hess_[3](x, t);
  return h;
}

Expr SmoothField::derivative(std::array<int, 2> beta, int time_order) const {
  Expr e = u_;
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < beta[i]; ++k) e = e.diff(kSpace[i]);
  for (int k = 0; k < time_order; ++k) e = e.diff(Var::t);
  return e;
}

double apply_operator(const CoefficientSet& coeffs, const DefiningFunction& rho,
                      const SmoothField& u, const Domain& domain, const Point& x, double t) {
  if (!domain.contains(x) || t < 0.0)
    throw DomainError(fmt::format("({:g},{:g},t={:g}) outside the space-time cylinder", x(0), x(1), t));
  const int n = coeffs.dim;
  const double r = rho(x);
  const Eigen::Matrix2d a = coeffs.a_at(x, t);
  const Eigen::Vector2d b = coeffs.b_at(x, t);
  const Eigen::Matrix2d h = u.hessian(x, t);
  const Eigen::Vector2d g = u.gradient(x, t);
  const double second = (a.topLeftCorner(n, n).cwiseProduct(h.topLeftCorner(n, n))).sum();
  const double first = b.head(n).dot(g.head(n));
  return r * r * second + r * first + coeffs.c_at(x, t) * u.value(x, t) - u.time_derivative(x, t);
}

Expr operator_expr(const CoefficientSet& coeffs, const DefiningFunction& rho, const Expr& u) {
  const int n = coeffs.dim;
  const Expr& r = rho.expr();
  Expr second;
  Expr first;
  for (int i = 0; i < n; ++i) {
    const Expr ui = u.diff(kSpace[i]);
    first += coeffs.b[i] * ui;
    for (int j = 0; j < n; ++j) second += coeffs.a[2 * i + j] * ui.diff(kSpace[j]);
  }
  return r * r * second + r * first + coeffs.c * u - u.diff(Var::t);
}

EllipticityReport ellipticity_bounds(const CoefficientSet& coeffs,
                                     const std::vector<SpaceTimeSample>& samples) {
  if (samples.empty()) throw ArgumentError("ellipticity_bounds needs at least one sample");
  EllipticityReport rep;
  rep.lambda_hat = std::numeric_limits<double>::infinity();
  rep.Lambda_hat = -std::numeric_limits<double>::infinity();
  const int n = coeffs.dim;
  for (const auto& s : samples) {
    const Eigen::Matrix2d a = coeffs.a_at(s.x, s.t);
    if (n == 2 && std::abs(a(0, 1) - a(1, 0)) > 1e-12 * (1.0 + a.cwiseAbs().maxCoeff()))
      throw InvariantError(fmt::format("diffusion matrix not symmetric at ({:g},{:g},t={:g})",
                                       s.x(0), s.x(1), s.t));
    if (n == 1) {
      rep.lambda_hat = std::min(rep.lambda_hat, a(0, 0));
      rep.Lambda_hat = std::max(rep.Lambda_hat, a(0, 0));
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(a, Eigen::EigenvaluesOnly);
    rep.lambda_hat = std::min(rep.lambda_hat, es.eigenvalues()(0));
    rep.Lambda_hat = std::max(rep.Lambda_hat, es.eigenvalues()(1));
  }
  const double slack = 1e-12;
  rep.violates_declared =
      rep.lambda_hat < coeffs.lambda - slack || rep.Lambda_hat > coeffs.Lambda + slack;
  return rep;
}

CharPoly<double> char_poly_at(const CoefficientSet& coeffs, const BoundaryPoint& p) {
  if (!coeffs.limits) throw ConfigError("characteristic polynomial needs declared limits");
  const auto& lim = *coeffs.limits;
  const int n = coeffs.dim;
  CharPoly<double> poly;
  for (int i = 0; i < n; ++i) {
    poly.B += lim.b[i](p.x, 0.0) * p.normal(i);
    for (int j = 0; j < n; ++j) poly.A += lim.a[2 * i + j](p.x, 0.0) * p.normal(i) * p.normal(j);
  }
  poly.C = lim.c(p.x, 0.0);
  return poly;
}

GateResult gate_check(const CoefficientSet& coeffs, const Domain& domain,
                      const DefiningFunction& rho, int k, double alpha, int lattice) {
  if (k < 0) throw ArgumentError("gate_check: k must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("gate_check: alpha must lie in (0,1)");
  GateResult res;
  res.sup_poly = -std::numeric_limits<double>::infinity();
  res.sup_cbar = -std::numeric_limits<double>::infinity();
  for (const BoundaryPoint& p : boundary_points(domain, rho, lattice)) {
    const CharPoly<double> poly = char_poly_at(coeffs, p);
    const double value = poly(k + alpha);
    if (value > res.sup_poly) {
      res.sup_poly = value;
      res.worst = p.x;
    }
    res.sup_cbar = std::max(res.sup_cbar, poly.C);
  }
  res.pass = res.sup_poly < 0.0 && res.sup_cbar < 0.0;
  res.margin = -res.sup_poly;
  return res;
}

double interior_poly(const CoefficientSet& coeffs, const Domain& domain, const Point& x, double mu) {
  if (domain.kind() != DomainKind::half_strip)
    throw ConfigError("interior polynomial is defined on the half strip only");
  if (!coeffs.limits) throw ConfigError("interior polynomial needs declared limits");
  const auto& lim = *coeffs.limits;
  return mu * (mu - 1.0) * lim.a[3](x, 0.0) + mu * lim.b[1](x, 0.0) + lim.c(x, 0.0);
}

GateResult interior_gate(const CoefficientSet& coeffs, const Domain& domain, double mu,
                         int lattice) {
  GateResult res;
  res.sup_poly = -std::numeric_limits<double>::infinity();
  res.sup_cbar = -std::numeric_limits<double>::infinity();
  const Point lo = domain.lower();
  const Point hi = domain.upper();
  for (int j = 0; j <= lattice; ++j) {
    for (int i = 0; i <= lattice; ++i) {
      const Point x(lo(0) + (hi(0) - lo(0)) * i / lattice, lo(1) + (hi(1) - lo(1)) * j / lattice);
      const double q = interior_poly(coeffs, domain, x, mu);
      if (q > res.sup_poly) {
        res.sup_poly = q;
        res.worst = x;
      }
      res.sup_cbar = std::max(res.sup_cbar, coeffs.limits->c(x, 0.0));
    }
  }
  res.pass = res.sup_poly < 0.0;
  res.margin = -res.sup_poly;
  return res;
}

}  // namespace degen
