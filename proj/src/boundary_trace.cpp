#include "degen/boundary_trace.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

constexpr double kInnerFraction = 1e-2;

bool is_zero(const Expr& e) { return e.is_constant() && e.constant_value() == 0.0; }

void require_half_strip(const Domain& domain, const char* what) {
  if (domain.kind() != DomainKind::half_strip)
    throw ConfigError(fmt::format("{} is defined on the flat face of the half strip only", what));
}

/// Stencils are applied to differences w_k - w_j so that constants differentiate to 0 exactly.
double point_time_derivative(const std::vector<double>& t, const Eigen::RowVectorXd& w, int j) {
  const int n = static_cast<int>(t.size());
  const double dt = t[1] - t[0];
  const auto d = [&](int k) { return w(k) - w(j); };
  if (n < 5) {
    if (j == 0) return (4.0 * d(1) - d(2)) / (2.0 * dt);
    if (j == n - 1) return -(4.0 * d(n - 2) - d(n - 3)) / (2.0 * dt);
    return (d(j + 1) - d(j - 1)) / (2.0 * dt);
  }
  if (j >= 2 && j <= n - 3) return (-d(j + 2) + 8.0 * d(j + 1) - 8.0 * d(j - 1) + d(j - 2)) / (12.0 * dt);
  if (j == 0) return (48.0 * d(1) - 36.0 * d(2) + 16.0 * d(3) - 3.0 * d(4)) / (12.0 * dt);
  if (j == 1) return (-3.0 * d(0) + 18.0 * d(2) - 6.0 * d(3) + d(4)) / (12.0 * dt);
  if (j == n - 1)
    return -(48.0 * d(n - 2) - 36.0 * d(n - 3) + 16.0 * d(n - 4) - 3.0 * d(n - 5)) / (12.0 * dt);
  return -(-3.0 * d(n - 1) + 18.0 * d(n - 3) - 6.0 * d(n - 4) + d(n - 5)) / (12.0 * dt);
}

BoundaryTrace empty_trace(int level, std::vector<BoundaryPoint> points,
                          const std::vector<double>& times, double tol) {
  BoundaryTrace tr;
  tr.level = level;
  tr.points = std::move(points);
  tr.times = times;
  tr.tol = tol;
  const auto np = static_cast<Eigen::Index>(tr.points.size());
  const auto nt = static_cast<Eigen::Index>(times.size());
  tr.values.setZero(np, nt);
  tr.c_eff.setZero(np, nt);
  tr.f_eff.setZero(np, nt);
  return tr;
}

void check_times(const std::vector<double>& times) {
  if (times.empty()) throw ArgumentError("trace: empty time lattice");
  if (times.front() < 0.0) throw ArgumentError("trace: times must be non-negative");
  for (std::size_t j = 1; j < times.size(); ++j)
    if (!(times[j] > times[j - 1])) throw ArgumentError("trace: times must increase strictly");
}

/// Fills one row of `tr` from a fibre evaluator.
void fill_row(BoundaryTrace& tr, int row, const FibreIntegral& fibre) {
  for (int j = 0; j < tr.time_count(); ++j) {
    const QuadResult q = fibre.evaluate(tr.times[j]);
    tr.values(row, j) = q.value;
    tr.c_eff(row, j) = fibre.c(tr.times[j]);
    tr.f_eff(row, j) = fibre.source(tr.times[j]);
    tr.achieved = std::max(tr.achieved, q.error);
  }
}

/// d_1 h along one fibre of the flat face.
class TangentialIntegral {
 public:
  TangentialIntegral(const CoefficientSet& coeffs, const Expr& phi, const Point& x0, double tol)
      : x0_(x0),
        c_(coeffs.c),
        c1_(coeffs.c.diff(Var::x1)),
        f_(coeffs.f),
        f1_(coeffs.f.diff(Var::x1)),
        phi_(phi(x0, 0.0)),
        phi1_(phi.diff(Var::x1)(x0, 0.0)),
        tol_(tol),
        h_(coeffs.c, x0, phi_, [f = coeffs.f, x0](double s) { return f(x0, s); }, tol) {}

  QuadResult evaluate(double t) const {
    const double ct = h_.exponent(0.0, t);
    const double c1t = integral_c1(0.0, t);
    const auto integrand = [&](double s) {
      return std::exp(h_.exponent(s, t)) *
             ((c1t - integral_c1(0.0, s)) * f_(x0_, s) + f1_(x0_, s));
    };
    QuadResult q = integrate(integrand, 0.0, t, 0.5 * tol_);
    q.value = std::exp(ct) * (phi1_ + phi_ * c1t) - q.value;
    return q;
  }

  double h(double t) const { return h_(t); }
  double c1(double t) const { return c1_(x0_, t); }
  double f1(double t) const { return f1_(x0_, t); }

 private:
  double integral_c1(double s, double t) const {
    if (c1_.is_constant()) return c1_.constant_value() * (t - s);
    if (!c1_.depends_on(Var::t)) return c1_(x0_, 0.0) * (t - s);
    return integrate([&](double r) { return c1_(x0_, r); }, s, t, kInnerFraction * tol_).value;
  }

  Point x0_;
  Expr c_, c1_, f_, f1_;
  double phi_, phi1_;
  double tol_;
  FibreIntegral h_;
};

}  // namespace

std::vector<double> uniform_times(double horizon, int count) {
  if (count < 2) throw ArgumentError("uniform_times: need at least two nodes");
  if (!(horizon > 0.0)) throw ArgumentError("uniform_times: horizon must be positive");
  std::vector<double> t(count);
  for (int j = 0; j < count; ++j) t[j] = horizon * j / (count - 1);
  return t;
}

FibreIntegral::FibreIntegral(Expr c, const Point& x0, double w0,
                             std::function<double(double)> source, double tol)
    : c_(std::move(c)), x0_(x0), w0_(w0), source_(std::move(source)), tol_(tol) {
  if (!(tol > 0.0)) throw ArgumentError("trace tolerance must be positive");
  constant_c_ = !c_.depends_on(Var::t);
  if (constant_c_) c_value_ = c_(x0_, 0.0);
}

double FibreIntegral::exponent(double s, double t) const {
  if (constant_c_) return c_value_ * (t - s);
  return integrate([&](double r) { return c_(x0_, r); }, s, t, kInnerFraction * tol_).value;
}

QuadResult FibreIntegral::evaluate(double t) const {
  const double ct = exponent(0.0, t);
  QuadResult q = integrate(
      [&](double s) { return std::exp(exponent(s, t)) * source_(s); }, 0.0, t, 0.5 * tol_);
  q.value = w0_ * std::exp(ct) - q.value;
  return q;
}

BoundaryTrace trace_h(const CoefficientSet& coeffs, const Expr& phi, const BoundaryPoint& x0,
                      const std::vector<double>& times, double tol) {
  return trace_h(coeffs, phi, std::vector<BoundaryPoint>{x0}, times, tol);
}

BoundaryTrace trace_h(const CoefficientSet& coeffs, const Expr& phi,
                      const std::vector<BoundaryPoint>& points, const std::vector<double>& times,
                      double tol) {
  check_times(times);
  BoundaryTrace tr = empty_trace(0, points, times, tol);
  for (int i = 0; i < tr.point_count(); ++i) {
    const Point x0 = points[i].x;
    const FibreIntegral fibre(coeffs.c, x0, phi(x0, 0.0),
                              [f = coeffs.f, x0](double s) { return f(x0, s); }, tol);
    fill_row(tr, i, fibre);
  }
  return tr;
}

BoundaryTrace trace_h_tangential(const CoefficientSet& coeffs, const Expr& phi,
                                 const BoundaryPoint& x0, const std::vector<double>& times,
                                 double tol) {
  check_times(times);
  if (coeffs.dim != 2) throw ConfigError("tangential trace derivative needs a 2-D problem");
  BoundaryTrace tr = empty_trace(0, {x0}, times, tol);
  const TangentialIntegral fibre(coeffs, phi, x0.x, tol);
  for (int j = 0; j < tr.time_count(); ++j) {
    const double t = times[j];
    const QuadResult q = fibre.evaluate(t);
    tr.values(0, j) = q.value;
    tr.c_eff(0, j) = coeffs.c(x0.x, t);
    tr.f_eff(0, j) = fibre.f1(t) - fibre.c1(t) * fibre.h(t);
    tr.achieved = std::max(tr.achieved, q.error);
  }
  return tr;
}

double compatibility_residual(const BoundaryTrace& trace) {
  if (trace.time_count() < 3) throw ArgumentError("compatibility residual needs >= 3 time nodes");
  double worst = 0.0;
  for (int i = 0; i < trace.point_count(); ++i) {
    const Eigen::RowVectorXd w = trace.values.row(i);
    for (int j = 0; j < trace.time_count(); ++j) {
      const double dt = point_time_derivative(trace.times, w, j);
      worst = std::max(worst, std::abs(dt - trace.c_eff(i, j) * w(j) + trace.f_eff(i, j)));
    }
  }
  return worst;
}

BoundaryTrace trace_u1(const CoefficientSet& coeffs, const Expr& phi, const Domain& domain,
                       const BoundaryPoint& x0, const std::vector<double>& times, double tol) {
  require_half_strip(domain, "trace_u1");
  check_times(times);
  const Point x = x0.x;
  const double phi_n = phi.diff(Var::x2)(x, 0.0);
  if (!std::isfinite(phi_n))
    throw ConfigError(fmt::format("trace_u1: initial data has no normal derivative at x1={:g}", x(0)));
  const Expr cn = coeffs.c.diff(Var::x2);
  const Expr fn = coeffs.f.diff(Var::x2);
  const Expr b1 = coeffs.b[0];
  const bool needs_h = !is_zero(cn);
  const bool needs_dh = !is_zero(b1);
  // Inner traces are evaluated at a tighter tolerance than the outer one.
  const auto inner = std::make_shared<TangentialIntegral>(coeffs, phi, x, kInnerFraction * tol);
  auto source = [=](double s) {
    double v = fn(x, s);
    if (needs_h) v -= cn(x, s) * inner->h(s);
    if (needs_dh) v -= b1(x, s) * inner->evaluate(s).value;
    return v;
  };
  const FibreIntegral fibre(coeffs.c + coeffs.b[1], x, phi_n, source, tol);
  BoundaryTrace tr = empty_trace(1, {x0}, times, tol);
  fill_row(tr, 0, fibre);
  return tr;
}

LadderCoefficients ladder_coefficients(const CoefficientSet& coeffs, const Domain& domain, int nu) {
  require_half_strip(domain, "ladder_coefficients");
  if (nu < 0) throw ArgumentError(fmt::format("ladder level must be >= 0 (got {})", nu));
  const double k = nu;
  LadderCoefficients out;
  for (int i = 0; i < 2; ++i) out.b[i] = coeffs.b[i] + 2.0 * k * coeffs.a[2 * i + 1];
  out.c = coeffs.c + k * coeffs.b[1] + k * (k - 1.0) * coeffs.a[3];
  return out;
}

Expr ladder_source(const CoefficientSet& coeffs, const Domain& domain, const Expr& u, int nu) {
  require_half_strip(domain, "ladder_source");
  if (nu < 0) throw ArgumentError(fmt::format("ladder level must be >= 0 (got {})", nu));
  const Var xs[2] = {Var::x1, Var::x2};
  const Expr xn = Expr::x2();
  Expr source = coeffs.f;
  Expr w = u;
  for (int level = 1; level <= nu; ++level) {
    const LadderCoefficients prev = ladder_coefficients(coeffs, domain, level - 1);
    Expr next = source.diff(Var::x2) - prev.c.diff(Var::x2) * w - prev.b[0] * w.diff(Var::x1);
    for (int i = 0; i < 2; ++i) {
      const Expr wi = w.diff(xs[i]);
      next -= xn * prev.b[i].diff(Var::x2) * wi;
      for (int j = 0; j < 2; ++j)
        next -= xn * xn * coeffs.a[2 * i + j].diff(Var::x2) * wi.diff(xs[j]);
      // 2 x_n a_{i alpha} d_{i alpha} w, alpha tangential
      next -= 2.0 * xn * coeffs.a[2 * i] * wi.diff(Var::x1);
    }
    source = next;
    w = w.diff(Var::x2);
  }
  return source;
}

BoundaryTrace trace_ladder(const CoefficientSet& coeffs, const Domain& domain, const Expr& u,
                           int nu, const BoundaryPoint& x0, const std::vector<double>& times,
                           double tol) {
  check_times(times);
  const LadderCoefficients lc = ladder_coefficients(coeffs, domain, nu);
  const Expr source = ladder_source(coeffs, domain, u, nu);
  Expr init = u;
  for (int k = 0; k < nu; ++k) init = init.diff(Var::x2);
  const Point x = x0.x;
  const FibreIntegral fibre(lc.c, x, init(x, 0.0), [source, x](double s) { return source(x, s); },
                            tol);
  BoundaryTrace tr = empty_trace(nu, {x0}, times, tol);
  fill_row(tr, 0, fibre);
  return tr;
}

BoundaryLimitReport boundary_limit(const CoefficientSet& coeffs, const BoundaryTrace& trace,
                                   const std::vector<double>& starts) {
  if (!coeffs.limits) throw ConfigError("boundary_limit needs declared limits");
  BoundaryLimitReport rep;
  for (const BoundaryPoint& p : trace.points) {
    const double cbar = coeffs.limits->c(p.x, 0.0);
    if (cbar == 0.0)
      throw GateError(fmt::format("limit coefficient vanishes at boundary point ({:g},{:g})",
                                  p.x(0), p.x(1)));
    rep.limit.push_back(coeffs.limits->f(p.x, 0.0) / cbar);
  }
  for (const double T : starts) {
    BoundaryLimitWindow w;
    w.T = T;
    for (int i = 0; i < trace.point_count(); ++i) {
      for (int j = 0; j < trace.time_count(); ++j) {
        const double t = trace.times[j];
        if (t < T || t > T + 1.0) continue;
        const double h = trace.values(i, j);
        w.deviation = std::max(w.deviation, std::abs(h - rep.limit[i]));
        w.rate = std::max(w.rate, std::abs(trace.c_eff(i, j) * h - trace.f_eff(i, j)));
      }
    }
    rep.windows.push_back(w);
  }
  rep.decaying = !rep.windows.empty();
  for (std::size_t k = 1; k < rep.windows.size(); ++k)
    if (rep.windows[k].deviation > rep.windows[k - 1].deviation) rep.decaying = false;
  return rep;
}

void write_trace_csv(std::ostream& out, const BoundaryTrace& trace) {
  out << "param,t,value,level\n";
  for (int i = 0; i < trace.point_count(); ++i)
    for (int j = 0; j < trace.time_count(); ++j)
      out << fmt::format("{:.17g},{:.17g},{:.17g},{}\n", trace.points[i].param, trace.times[j],
                         trace.values(i, j), trace.level);
}

}  // namespace degen
