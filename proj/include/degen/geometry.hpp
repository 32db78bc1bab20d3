#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "degen/expr.hpp"

namespace degen {

enum class DomainKind { interval, disk, half_strip };

/// One of the three supported geometries.
///
/// interval(a, b) lives in 1-D; both endpoints are degenerate.
/// disk(center, R) lives in 2-D; the whole circle is degenerate.
/// half_strip(r) is G_r = {|x1| < r, 0 < x2 < r}; only the face x2 = 0 is
/// degenerate, the three remaining faces are artificial.
class Domain {
 public:
  static Domain interval(double a, double b);
  static Domain disk(const Point& center, double radius);
  static Domain half_strip(double r);

  DomainKind kind() const { return kind_; }
  int dim() const { return kind_ == DomainKind::interval ? 1 : 2; }

  double a() const { return a_; }
  double b() const { return b_; }
  const Point& center() const { return center_; }
  double radius() const { return radius_; }
  double halfwidth() const { return radius_; }

  /// Closed-domain membership with a small absolute slack.
  bool contains(const Point& x, double slack = 1e-12) const;
  bool on_degenerate_boundary(const Point& x, double tol = 1e-12) const;

  /// Axis-aligned bounding box [lo, hi] of the closure.
  Point lower() const;
  Point upper() const;
  double diameter() const;

  std::string describe() const;

 private:
  Domain() = default;

  DomainKind kind_ = DomainKind::interval;
  double a_ = 0.0;
  double b_ = 1.0;
  Point center_ = Point::Zero();
  double radius_ = 1.0;
};

/// A defining function rho with exact first and second derivatives.
class DefiningFunction {
 public:
  DefiningFunction(Expr rho, int dim, double comparability);

  double operator()(const Point& x) const { return rho_(x, 0.0); }
  Eigen::Vector2d gradient(const Point& x) const;
  Eigen::Matrix2d hessian(const Point& x) const;
  double laplacian(const Point& x) const { return hessian(x).trace(); }

  const Expr& expr() const { return rho_; }
  const Expr& gradient_expr(int i) const { return grad_[i]; }
  const Expr& hessian_expr(int i, int j) const { return hess_[2 * i + j]; }
  int dim() const { return dim_; }
  /// Constant C with C^-1 d <= rho <= C d for the canonical choice.
  double comparability() const { return comparability_; }

 private:
  Expr rho_;
  std::array<Expr, 2> grad_;
  std::array<Expr, 4> hess_;
  int dim_;
  double comparability_;
};

/// Canonical rho with |grad rho| = 1 on the degenerate boundary:
/// interval (x-a)(b-x)/(b-a), disk (R^2-|x-c|^2)/(2R), half strip x2.
DefiningFunction make_defining_function(const Domain& domain);

/// (|grad rho|^2 - 1) / rho for the canonical rho, which is constant on every
/// supported geometry: -4/(b-a), -2/R, and 0.
double removable_gradient_factor(const Domain& domain);

/// Euclidean distance to the degenerate boundary. Throws DomainError outside.
double boundary_distance(const Domain& domain, const Point& x);

struct BoundaryPoint {
  Point x = Point::Zero();
  Eigen::Vector2d normal = Eigen::Vector2d::Zero();  // inward unit normal, equal to grad rho at x
  double param = 0.0;      // boundary parameter: endpoint, angle, or x1
};

/// Samples of the degenerate boundary. For the interval `count` is ignored
/// and both endpoints are returned.
std::vector<BoundaryPoint> boundary_points(const Domain& domain, const DefiningFunction& rho,
                                           int count);

BoundaryPoint boundary_point_at(const Domain& domain, const DefiningFunction& rho, double param);

/// Deterministic interior lattice with roughly `samples` points.
std::vector<Point> interior_lattice(const Domain& domain, int samples);

struct DefiningFunctionReport {
  double comparability = 0.0;       // smallest C with C^-1 d <= rho <= C d on samples
  double gradient_defect = 0.0;     // max |1 - |grad rho|| on boundary samples
  double boundary_value = 0.0;      // max |rho| on boundary samples
  double normal_defect = 0.0;       // max |nu - grad rho| on boundary samples
  bool pass = false;
};

DefiningFunctionReport check_defining_function(const DefiningFunction& rho, const Domain& domain,
                                               int samples, double tol,
                                               int boundary_samples = 1000);

/// Same check restricted to a caller-chosen interior sample set.
DefiningFunctionReport check_defining_function(const DefiningFunction& rho, const Domain& domain,
                                               const std::vector<Point>& interior, double tol,
                                               int boundary_samples = 1000);

}  // namespace degen
