#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "degen/expr.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"

namespace degen {

/// Parameters of the constant-coefficient family
///   L = a rho^2 Lap + b rho grad(rho).grad + c - d_t,
///   u = e^{-tau t} sum_{i<=m} psi_i rho^{s+i}.
struct ManufacturedSpec {
  double a = 1.0;
  double b = 0.0;
  double c = -2.0;
  double s = 0.5;
  int m = 0;
  std::string psi0 = "1";  // expression in x1, x2
  Domain domain = Domain::interval(0.0, 1.0);

  /// Throws ConfigError if s is a non-positive or integer value, a <= 0,
  /// m < 0, or a (2s + i - 1) + b = 0 for some i in 1..m.
  void validate() const;

  /// Canonical name "ex11:a=..,b=..,c=..,s=..,m=..,psi0=..".
  std::string name() const;
};

/// Parses "ex11:a=1,b=0,c=-2,s=0.5,m=0[,psi0=1+x^2]". Missing keys keep the
/// defaults above; the domain is supplied separately.
ManufacturedSpec parse_manufactured(std::string_view text, const Domain& domain);

struct ManufacturedSolution {
  ManufacturedSpec spec;
  DefiningFunction rho;
  CoefficientSet coeffs;
  double tau = 0.0;
  std::vector<Expr> psi;
  Expr u;
  Expr f;
  Expr f_factor;  // f = e^{-tau t} rho^{s+m+1} f_factor, smooth up to the boundary
  SmoothField field;
};

ManufacturedSolution build(const ManufacturedSpec& spec);

/// max |L u - f| over the samples with exact derivatives.
double residual_check(const ManufacturedSolution& sol, const std::vector<SpaceTimeSample>& samples);

/// Same, with tau replaced by tau + dtau in L (negative control).
double residual_check_shifted(const ManufacturedSolution& sol,
                              const std::vector<SpaceTimeSample>& samples, double dtau);

/// Seeded uniform samples of the open domain times (0, horizon].
std::vector<SpaceTimeSample> random_interior_samples(const Domain& domain, int count,
                                                     std::uint64_t seed, double horizon = 1.0);

struct RegularityTag {
  int k = 0;
  double alpha = 0.0;
  std::optional<double> mu_plus;
};

/// k = floor(s), alpha = s - k and the positive root of P. In the stationary
/// regime (tau = 0) asserts mu_plus = s.
RegularityTag regularity_tag(const ManufacturedSolution& sol);

struct ManufacturedBoundaryData {
  Expr phi;
  double h = 0.0;                   // h vanishes identically for s > 0
  std::optional<double> u1;         // 0 when s > 1
  bool normal_derivative_unbounded = false;
};

ManufacturedBoundaryData boundary_data(const ManufacturedSolution& sol);

}  // namespace degen
