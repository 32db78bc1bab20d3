#include "degen/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

Domain Domain::interval(double a, double b) {
  if (!(a < b)) throw ArgumentError(fmt::format("interval requires a < b (got {}, {})", a, b));
  Domain d;
  d.kind_ = DomainKind::interval;
  d.a_ = a;
  d.b_ = b;
  return d;
}

Domain Domain::disk(const Point& center, double radius) {
  if (!(radius > 0.0)) throw ArgumentError(fmt::format("disk requires radius > 0 (got {})", radius));
  Domain d;
  d.kind_ = DomainKind::disk;
  d.center_ = center;
  d.radius_ = radius;
  return d;
}

Domain Domain::half_strip(double r) {
  if (!(r > 0.0)) throw ArgumentError(fmt::format("half_strip requires r > 0 (got {})", r));
  Domain d;
  d.kind_ = DomainKind::half_strip;
  d.radius_ = r;
  return d;
}

bool Domain::contains(const Point& x, double slack) const {
  switch (kind_) {
    case DomainKind::interval: return x(0) >= a_ - slack && x(0) <= b_ + slack;
    case DomainKind::disk: return (x - center_).norm() <= radius_ + slack;
    case DomainKind::half_strip:
      return std::abs(x(0)) <= radius_ + slack && x(1) >= -slack && x(1) <= radius_ + slack;
  }
  return false;
}

bool Domain::on_degenerate_boundary(const Point& x, double tol) const {
  switch (kind_) {
    case DomainKind::interval: return std::abs(x(0) - a_) <= tol || std::abs(x(0) - b_) <= tol;
    case DomainKind::disk: return std::abs((x - center_).norm() - radius_) <= tol;
    case DomainKind::half_strip: return std::abs(x(1)) <= tol && std::abs(x(0)) <= radius_ + tol;
  }
  return false;
}

Point Domain::lower() const {
  switch (kind_) {
    case DomainKind::interval: return Point(a_, 0.0);
    case DomainKind::disk: return center_ - Point::Constant(radius_);
    case DomainKind::half_strip: return Point(-radius_, 0.0);
  }
  return Point::Zero();
}

Point Domain::upper() const {
  switch (kind_) {
    case DomainKind::interval: return Point(b_, 0.0);
    case DomainKind::disk: return center_ + Point::Constant(radius_);
    case DomainKind::half_strip: return Point(radius_, radius_);
  }
  return Point::Zero();
}

double Domain::diameter() const { return (upper() - lower()).norm(); }

std::string Domain::describe() const {
  switch (kind_) {
    case DomainKind::interval: return fmt::format("interval({:g},{:g})", a_, b_);
    case DomainKind::disk:
      return fmt::format("disk(({:g},{:g}),{:g})", center_(0), center_(1), radius_);
    case DomainKind::half_strip: return fmt::format("half_strip({:g})", radius_);
  }
  return {};
}

DefiningFunction::DefiningFunction(Expr rho, int dim, double comparability)
    : rho_(std::move(rho)), dim_(dim), comparability_(comparability) {
  const Var vars[2] = {Var::x1, Var::x2};
  for (int i = 0; i < 2; ++i) grad_[i] = rho_.diff(vars[i]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) hess_[2 * i + j] = grad_[i].diff(vars[j]);
}

Eigen::Vector2d DefiningFunction::gradient(const Point& x) const {
  return {grad_[0](x, 0.0), grad_[1](x, 0.0)};
}

Eigen::Matrix2d DefiningFunction::hessian(const Point& x) const {
  Eigen::Matrix2d h;
  h << hess_[0](x, 0.0), hess_[1](x, 0.0), hess_[2](x, 0.0), hess_[3](x, 0.0);
  return h;
}

DefiningFunction make_defining_function(const Domain& domain) {
  const Expr x1 = Expr::x1();
  const Expr x2 = Expr::x2();
  switch (domain.kind()) {
    case DomainKind::interval: {
      const double a = domain.a();
      const double b = domain.b();
      return DefiningFunction((x1 - a) * (Expr(b) - x1) / (b - a), 1, 2.0);
    }
    case DomainKind::disk: {
      const double r = domain.radius();
      const Expr dx = x1 - domain.center()(0);
      const Expr dy = x2 - domain.center()(1);
      return DefiningFunction((Expr(r * r) - (dx * dx + dy * dy)) / (2.0 * r), 2, 2.0);
    }
    case DomainKind::half_strip: return DefiningFunction(x2, 2, 1.0);
  }
  throw ArgumentError("unknown domain kind");
}

double removable_gradient_factor(const Domain& domain) {
  switch (domain.kind()) {
    case DomainKind::interval: return -4.0 / (domain.b() - domain.a());
    case DomainKind::disk: return -2.0 / domain.radius();
    case DomainKind::half_strip: return 0.0;
  }
  return 0.0;
}

double boundary_distance(const Domain& domain, const Point& x) {
  if (!domain.contains(x, 0.0))
    throw DomainError(fmt::format("point ({:g},{:g}) outside {}", x(0), x(1), domain.describe()));
  switch (domain.kind()) {
    case DomainKind::interval: return std::min(x(0) - domain.a(), domain.b() - x(0));
    case DomainKind::disk: return domain.radius() - (x - domain.center()).norm();
    case DomainKind::half_strip: return x(1);
  }
  return 0.0;
}

BoundaryPoint boundary_point_at(const Domain& domain, const DefiningFunction& rho, double param) {
  BoundaryPoint p;
  p.param = param;
  switch (domain.kind()) {
    case DomainKind::interval: p.x = Point(param, 0.0); break;
    case DomainKind::disk:
      p.x = domain.center() + domain.radius() * Point(std::cos(param), std::sin(param));
      break;
    case DomainKind::half_strip: p.x = Point(param, 0.0); break;
  }
  p.normal = rho.gradient(p.x);
  return p;
}

std::vector<BoundaryPoint> boundary_points(const Domain& domain, const DefiningFunction& rho,
                                           int count) {
  std::vector<BoundaryPoint> out;
  switch (domain.kind()) {
    case DomainKind::interval:
      out.push_back(boundary_point_at(domain, rho, domain.a()));
      out.push_back(boundary_point_at(domain, rho, domain.b()));
      break;
    case DomainKind::disk:
      for (int i = 0; i < count; ++i)
        out.push_back(boundary_point_at(domain, rho, 2.0 * std::numbers::pi * i / count));
      break;
    case DomainKind::half_strip: {
      const double r = domain.halfwidth();
      for (int i = 0; i < count; ++i)
        out.push_back(boundary_point_at(domain, rho, -r + 2.0 * r * (i + 0.5) / count));
      break;
    }
  }
  return out;
}

std::vector<Point> interior_lattice(const Domain& domain, int samples) {
  std::vector<Point> out;
  if (domain.dim() == 1) {
    for (int i = 1; i <= samples; ++i)
      out.emplace_back(domain.a() + (domain.b() - domain.a()) * i / (samples + 1.0), 0.0);
    return out;
  }
  const int per_axis = std::max(2, static_cast<int>(std::ceil(std::sqrt(double(samples)))));
  const Point lo = domain.lower();
  const Point hi = domain.upper();
  for (int j = 1; j <= per_axis; ++j) {
    for (int i = 1; i <= per_axis; ++i) {
      const Point x(lo(0) + (hi(0) - lo(0)) * i / (per_axis + 1.0),
                    lo(1) + (hi(1) - lo(1)) * j / (per_axis + 1.0));
      if (domain.contains(x, 0.0) && boundary_distance(domain, x) > 0.0) out.push_back(x);
    }
  }
  return out;
}

DefiningFunctionReport check_defining_function(const DefiningFunction& rho, const Domain& domain,
                                               int samples, double tol, int boundary_samples) {
  return check_defining_function(rho, domain, interior_lattice(domain, std::max(samples, 1)), tol,
                                 boundary_samples);
}

DefiningFunctionReport check_defining_function(const DefiningFunction& rho, const Domain& domain,
                                               const std::vector<Point>& interior, double tol,
                                               int boundary_samples) {
  DefiningFunctionReport report;
  report.comparability = 1.0;
  for (const Point& x : interior) {
    const double d = boundary_distance(domain, x);
    const double r = rho(x);
    if (d <= 0.0 || r <= 0.0) continue;
    report.comparability = std::max({report.comparability, r / d, d / r});
  }
  for (const BoundaryPoint& p : boundary_points(domain, rho, boundary_samples)) {
    const Eigen::Vector2d g = rho.gradient(p.x);
    report.gradient_defect = std::max(report.gradient_defect, std::abs(1.0 - g.norm()));
    report.boundary_value = std::max(report.boundary_value, std::abs(rho(p.x)));
    report.normal_defect = std::max(report.normal_defect, (p.normal - g).cwiseAbs().maxCoeff());
  }
  report.pass = report.gradient_defect <= tol && report.boundary_value <= tol &&
                report.normal_defect <= tol;
  return report;
}

}  // namespace degen
