#include "degen/manufactured.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end)
    throw ConfigError(fmt::format("manufactured case: bad value '{}' for {}", v, key));
  return out;
}

/// Coefficient of rho^{p+1} in e^{tau t} rho^{-p} L(e^{-tau t} psi rho^p) after
/// the leading term: p (a (p-1) + b) G psi + a p psi Lap(rho)
/// + (2 a p + b) grad(psi).grad(rho) + a rho Lap(psi).
Expr next_order(const ManufacturedSpec& sp, const DefiningFunction& rho, double G, const Expr& psi,
                double p) {
  const int n = sp.domain.dim();
  const Var xs[2] = {Var::x1, Var::x2};
  Expr lap_rho;
  Expr lap_psi;
  Expr grad_dot;
  for (int i = 0; i < n; ++i) {
    const Expr dpsi = psi.diff(xs[i]);
    lap_rho += rho.hessian_expr(i, i);
    lap_psi += dpsi.diff(xs[i]);
    grad_dot += dpsi * rho.gradient_expr(i);
  }
  const double a = sp.a;
  const double b = sp.b;
  return p * (a * (p - 1.0) + b) * G * psi + a * p * psi * lap_rho + (2.0 * a * p + b) * grad_dot +
         a * rho.expr() * lap_psi;
}

double char_poly(const ManufacturedSpec& sp, double mu) {
  return sp.a * mu * (mu - 1.0) + sp.b * mu + sp.c;
}

}  // namespace

void ManufacturedSpec::validate() const {
  if (!(a > 0.0)) throw ConfigError(fmt::format("manufactured case: a must be > 0 (got {})", a));
  if (!(s > 0.0) || s == std::floor(s))
    throw ConfigError(fmt::format("manufactured case: s must be positive and non-integer (got {})", s));
  if (m < 0) throw ConfigError(fmt::format("manufactured case: m must be >= 0 (got {})", m));
  for (int i = 1; i <= m; ++i)
    if (a * (2.0 * s + i - 1.0) + b == 0.0)
      throw ConfigError(fmt::format("manufactured case: a(2s+i-1)+b vanishes for i={}", i));
}

std::string ManufacturedSpec::name() const {
  return fmt::format("ex11:a={:g},b={:g},c={:g},s={:g},m={},psi0={}", a, b, c, s, m, psi0);
}

ManufacturedSpec parse_manufactured(std::string_view text, const Domain& domain) {
  constexpr std::string_view prefix = "ex11:";
  text = trim(text);
  if (text.substr(0, prefix.size()) != prefix)
    throw ConfigError(fmt::format("unknown manufactured case '{}'", text));
  text.remove_prefix(prefix.size());
  ManufacturedSpec sp;
  sp.domain = domain;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(fmt::format("manufactured case: expected key=value, got '{}'", item));
    const std::string_view key = trim(item.substr(0, eq));
    const std::string_view val = trim(item.substr(eq + 1));
    if (key == "a") sp.a = parse_number(key, val);
    else if (key == "b") sp.b = parse_number(key, val);
    else if (key == "c") sp.c = parse_number(key, val);
    else if (key == "s") sp.s = parse_number(key, val);
    else if (key == "m") {
      const double m = parse_number(key, val);
      if (m != std::floor(m)) throw ConfigError("manufactured case: m must be an integer");
      sp.m = static_cast<int>(m);
    } else if (key == "psi0") sp.psi0 = std::string(val);
    else throw ConfigError(fmt::format("manufactured case: unknown key '{}'", key));
  }
  sp.validate();
  return sp;
}

ManufacturedSolution build(const ManufacturedSpec& spec) {
  spec.validate();
  const Domain& dom = spec.domain;
  const DefiningFunction rho = make_defining_function(dom);
  const double G = removable_gradient_factor(dom);
  const double tau = -char_poly(spec, spec.s);

  std::vector<Expr> psi{parse_expr(spec.psi0)};
  if (psi[0].depends_on(Var::t)) throw ConfigError("manufactured case: psi0 must not depend on t");
  for (int i = 1; i <= spec.m; ++i) {
    const double denom = spec.a * i * (2.0 * spec.s + i - 1.0) + spec.b * i;  // P(s+i) + tau
    psi.push_back(-next_order(spec, rho, G, psi[i - 1], spec.s + i - 1.0) / denom);
  }

  const Expr decay = tau == 0.0 ? Expr(1.0) : exp(-tau * Expr::t());
  Expr sum;
  for (int i = 0; i <= spec.m; ++i) sum += psi[i] * pow(rho.expr(), Expr(spec.s + i));
  const Expr factor = next_order(spec, rho, G, psi[spec.m], spec.s + spec.m);
  const Expr f = decay * pow(rho.expr(), Expr(spec.s + spec.m + 1.0)) * factor;
  const Expr u = decay * sum;

  CoefficientSet coeffs = constant_coefficients(rho, dom.dim(), spec.a, spec.b, spec.c, f);
  if (tau > 0.0) coeffs.limits->f = Expr(0.0);
  return ManufacturedSolution{spec, rho, coeffs, tau, psi, u, f, factor, SmoothField(u)};
}

double residual_check(const ManufacturedSolution& sol, const std::vector<SpaceTimeSample>& samples) {
  return residual_check_shifted(sol, samples, 0.0);
}

double residual_check_shifted(const ManufacturedSolution& sol,
                              const std::vector<SpaceTimeSample>& samples, double dtau) {
  double worst = 0.0;
  for (const auto& p : samples) {
    const double lu = apply_operator(sol.coeffs, sol.rho, sol.field, sol.spec.domain, p.x, p.t) +
                      dtau * sol.field.value(p.x, p.t);
    worst = std::max(worst, std::abs(lu - sol.f(p.x, p.t)));
  }
  return worst;
}

std::vector<SpaceTimeSample> random_interior_samples(const Domain& domain, int count,
                                                     std::uint64_t seed, double horizon) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Point lo = domain.lower();
  const Point hi = domain.upper();
  std::vector<SpaceTimeSample> out;
  out.reserve(count);
  while (static_cast<int>(out.size()) < count) {
    Point x(lo(0) + (hi(0) - lo(0)) * unit(rng), lo(1) + (hi(1) - lo(1)) * unit(rng));
    if (domain.dim() == 1) x(1) = 0.0;
    const double t = horizon * unit(rng);
    if (!domain.contains(x, 0.0) || boundary_distance(domain, x) <= 0.0 || t <= 0.0) continue;
    out.push_back({x, t});
  }
  return out;
}

RegularityTag regularity_tag(const ManufacturedSolution& sol) {
  RegularityTag tag;
  tag.k = static_cast<int>(std::floor(sol.spec.s));
  tag.alpha = sol.spec.s - tag.k;
  const CharPoly<double> p{sol.spec.a, sol.spec.b, sol.spec.c};
  tag.mu_plus = p.positive_root();
  if (sol.tau == 0.0 && (!tag.mu_plus || std::abs(*tag.mu_plus - sol.spec.s) > 1e-12))
    throw AssertionFailure(fmt::format("stationary case: positive root differs from s={}", sol.spec.s));
  return tag;
}

ManufacturedBoundaryData boundary_data(const ManufacturedSolution& sol) {
  ManufacturedBoundaryData out;
  for (int i = 0; i <= sol.spec.m; ++i)
    out.phi += sol.psi[i] * pow(sol.rho.expr(), Expr(sol.spec.s + i));
  if (sol.spec.s > 1.0) out.u1 = 0.0;
  else out.normal_derivative_unbounded = true;
  return out;
}

}  // namespace degen
