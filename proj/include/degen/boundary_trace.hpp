#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "degen/expr.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/quadrature.hpp"

namespace degen {

/// Uniform lattice {0, T/(count-1), ..., T}.
std::vector<double> uniform_times(double horizon, int count);

/// Lateral trace of level nu (0: h, 1: the normal derivative u1, ...) on a
/// boundary-point x time lattice, together with the effective coefficient and
/// source of the fibre ODE  d_t w = c_eff w - f_eff  that it solves.
struct BoundaryTrace {
  int level = 0;
  std::vector<BoundaryPoint> points;
  std::vector<double> times;
  Eigen::MatrixXd values;  // points x times
  Eigen::MatrixXd c_eff;
  Eigen::MatrixXd f_eff;
  double tol = 0.0;
  double achieved = 0.0;  // largest quadrature error estimate over the lattice

  int point_count() const { return static_cast<int>(points.size()); }
  int time_count() const { return static_cast<int>(times.size()); }
};

/// Evaluator of the forced trace along one boundary fibre
///
///   w(t) = w0 exp(C(t)) - int_0^t exp(C(t) - C(s)) g(s) ds,   C(t) = int_0^t c,
///
/// for closed-form c and a source g given as a callable.
class FibreIntegral {
 public:
  FibreIntegral(Expr c, const Point& x0, double w0, std::function<double(double)> source,
                double tol);

  double operator()(double t) const { return evaluate(t).value; }
  QuadResult evaluate(double t) const;
  /// C(t) - C(s).
  double exponent(double s, double t) const;

  double c(double t) const { return c_(x0_, t); }
  double source(double t) const { return source_(t); }

 private:
  Expr c_;
  Point x0_;
  double w0_;
  std::function<double(double)> source_;
  double tol_;
  bool constant_c_;
  double c_value_ = 0.0;
};

/// h at one boundary point: initial value phi(x0), coefficient c, source f.
BoundaryTrace trace_h(const CoefficientSet& coeffs, const Expr& phi, const BoundaryPoint& x0,
                      const std::vector<double>& times, double tol = 1e-10);

/// h at several boundary points.
BoundaryTrace trace_h(const CoefficientSet& coeffs, const Expr& phi,
                      const std::vector<BoundaryPoint>& points, const std::vector<double>& times,
                      double tol = 1e-10);

/// Tangential derivative d_1 h on the flat face, by differentiating the trace
/// formula under the integral sign.
BoundaryTrace trace_h_tangential(const CoefficientSet& coeffs, const Expr& phi,
                                 const BoundaryPoint& x0, const std::vector<double>& times,
                                 double tol = 1e-10);

/// max over the lattice of |d_t w - c_eff w + f_eff|, with d_t by fourth-order
/// differences (one-sided near the ends; second order below five nodes).
double compatibility_residual(const BoundaryTrace& trace);

/// First-order trace u1 = d_n u on the flat face of the half strip: an
/// h-type integral with coefficient c + b_n, initial value d_n phi and source
/// d_n f - d_n c h - b_1 d_1 h built from the data alone.
BoundaryTrace trace_u1(const CoefficientSet& coeffs, const Expr& phi, const Domain& domain,
                       const BoundaryPoint& x0, const std::vector<double>& times,
                       double tol = 1e-10);

struct LadderCoefficients {
  std::array<Expr, 2> b;
  Expr c;
};

/// b_i + 2 nu a_in and c + nu b_n + nu (nu - 1) a_nn on the half strip.
LadderCoefficients ladder_coefficients(const CoefficientSet& coeffs, const Domain& domain, int nu);

/// Source of the level-nu equation for d_n^nu u, available when u is known
/// in closed form (manufactured cases). Level 0 returns f.
Expr ladder_source(const CoefficientSet& coeffs, const Domain& domain, const Expr& u, int nu);

/// Trace of d_n^nu u for an exactly known u, integrated from the level-nu
/// coefficient, source and initial value.
BoundaryTrace trace_ladder(const CoefficientSet& coeffs, const Domain& domain, const Expr& u,
                           int nu, const BoundaryPoint& x0, const std::vector<double>& times,
                           double tol = 1e-10);

struct BoundaryLimitWindow {
  double T = 0.0;
  double deviation = 0.0;  // sup |h - fbar/cbar| over points and times in [T, T+1]
  double rate = 0.0;       // sup |d_t h| over the same set
};

struct BoundaryLimitReport {
  std::vector<double> limit;  // fbar/cbar per point
  std::vector<BoundaryLimitWindow> windows;
  bool decaying = false;  // deviations non-increasing over the tail windows
};

/// Deviation of h from fbar/cbar per unit window starting at each of `starts`.
/// Throws GateError if cbar vanishes at a sampled point.
BoundaryLimitReport boundary_limit(const CoefficientSet& coeffs, const BoundaryTrace& trace,
                                   const std::vector<double>& starts);

/// CSV with columns param,t,value,level.
void write_trace_csv(std::ostream& out, const BoundaryTrace& trace);

}  // namespace degen
