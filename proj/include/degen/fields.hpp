#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "degen/expr.hpp"
#include "degen/geometry.hpp"

namespace degen {

/// Time-independent limits of the coefficients as t -> infinity.
struct LimitCoefficients {
  std::array<Expr, 4> a{Expr(1.0), Expr(0.0), Expr(0.0), Expr(1.0)};  // row-major 2x2
  std::array<Expr, 2> b{};
  Expr c;
  Expr f;
};

/// Coefficients of L u = rho^2 a_ij d_ij u + rho b_i d_i u + c u - d_t u and
/// the right-hand side f, as closed-form evaluators.
struct CoefficientSet {
  int dim = 1;
  std::array<Expr, 4> a{Expr(1.0), Expr(0.0), Expr(0.0), Expr(1.0)};  // row-major 2x2
  std::array<Expr, 2> b{};
  Expr c;
  Expr f;
  std::optional<LimitCoefficients> limits;
  double lambda = 1.0;  // declared ellipticity bounds
  double Lambda = 1.0;

  Eigen::Matrix2d a_at(const Point& x, double t) const;
  Eigen::Vector2d b_at(const Point& x, double t) const;
  double c_at(const Point& x, double t) const { return c(x, t); }
  double f_at(const Point& x, double t) const { return f(x, t); }

  /// True when every coefficient and f ignore t.
  bool time_independent() const;

  /// Coefficient set whose a, b, c, f are the declared limits (which stay
  /// declared as limits of themselves). Throws ConfigError without limits.
  CoefficientSet limit_problem() const;
};

/// Constant-coefficient operator a rho^2 Lap + b rho grad(rho).grad + c on a
/// domain. The limits repeat the constants; the limit of f is `f` when it
/// ignores t and 0 otherwise (callers override it as needed).
CoefficientSet constant_coefficients(const DefiningFunction& rho, int dim, double a, double b,
                                     double c, const Expr& f = Expr(0.0));

/// A space-time function with exact derivatives.
class SmoothField {
 public:
  SmoothField() = default;
  explicit SmoothField(Expr u);

  double value(const Point& x, double t) const { return u_(x, t); }
  Eigen::Vector2d gradient(const Point& x, double t) const;
  Eigen::Matrix2d hessian(const Point& x, double t) const;
  double time_derivative(const Point& x, double t) const { return dt_(x, t); }

  /// D^beta d_t^order u with beta = (beta1, beta2).
  Expr derivative(std::array<int, 2> beta, int time_order) const;

  const Expr& expr() const { return u_; }

 private:
  Expr u_;
  std::array<Expr, 2> grad_;
  std::array<Expr, 4> hess_;
  Expr dt_;
};

/// L u at (x, t) assembled from exact derivatives. Throws DomainError
/// outside the closed space-time cylinder.
double apply_operator(const CoefficientSet& coeffs, const DefiningFunction& rho,
                      const SmoothField& u, const Domain& domain, const Point& x, double t);

/// L u as a symbolic expression; used to manufacture f for exact solutions.
Expr operator_expr(const CoefficientSet& coeffs, const DefiningFunction& rho, const Expr& u);

struct SpaceTimeSample {
  Point x = Point::Zero();
  double t = 0.0;
};

struct EllipticityReport {
  double lambda_hat = 0.0;
  double Lambda_hat = 0.0;
  bool violates_declared = false;
};

/// Extreme eigenvalues of a over the samples. Throws InvariantError if a is
/// not symmetric at some sample.
EllipticityReport ellipticity_bounds(const CoefficientSet& coeffs,
                                     const std::vector<SpaceTimeSample>& samples);

/// P(mu) = mu (mu - 1) A + mu B + C at one boundary point.
template <typename Scalar>
struct CharPoly {
  Scalar A{};
  Scalar B{};
  Scalar C{};

  Scalar operator()(Scalar mu) const { return mu * (mu - Scalar(1)) * A + mu * B + C; }

  /// Real roots (smaller first) of A mu^2 + (B - A) mu + C, if any.
  std::optional<std::pair<Scalar, Scalar>> roots() const {
    using std::sqrt;
    const Scalar p = B - A;
    const Scalar disc = p * p - Scalar(4) * A * C;
    if (disc < Scalar(0)) return std::nullopt;
    const Scalar s = sqrt(disc);
    // Cancellation-free pairing of the two roots.
    const Scalar q = p >= Scalar(0) ? -(p + s) / Scalar(2) : -(p - s) / Scalar(2);
    Scalar r1 = q / A;
    Scalar r2 = q != Scalar(0) ? C / q : Scalar(0);
    if (r2 < r1) std::swap(r1, r2);
    return std::make_pair(r1, r2);
  }

  std::optional<Scalar> positive_root() const {
    auto r = roots();
    if (!r || r->second <= Scalar(0)) return std::nullopt;
    return r->second;
  }
};

CharPoly<double> char_poly_at(const CoefficientSet& coeffs, const BoundaryPoint& p);

struct GateResult {
  bool pass = false;
  double margin = 0.0;      // -sup P(k + alpha) (or -sup Q(mu)) over the lattice
  double sup_poly = 0.0;
  double sup_cbar = 0.0;
  Point worst = Point::Zero();
};

/// Checks sup P(k + alpha) < 0 and sup cbar < 0 over a boundary lattice.
GateResult gate_check(const CoefficientSet& coeffs, const Domain& domain,
                      const DefiningFunction& rho, int k, double alpha, int lattice = 256);

/// Q(mu)(x) = mu (mu - 1) abar_nn + mu bbar_n + cbar on the half strip.
double interior_poly(const CoefficientSet& coeffs, const Domain& domain, const Point& x, double mu);

/// Q(mu) < 0 on a lattice of the closed half strip.
GateResult interior_gate(const CoefficientSet& coeffs, const Domain& domain, double mu,
                         int lattice = 64);

}  // namespace degen
