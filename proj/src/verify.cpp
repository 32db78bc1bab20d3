#include "degen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_boundary_node(const SpaceTimeField& f, int node) {
  const int i = node % f.n1();
  if (i == 0 || i == f.n1() - 1) return true;
  if (f.dim == 1) return false;
  const int j = node / f.n1();
  return j == 0 || j == f.n2() - 1;
}

// Levels used to sample coefficients: all of them when there are few,
// otherwise an evenly spread subset that keeps the first and last.
std::vector<int> sampled_levels(const SpaceTimeField& f, int cap) {
  const int n = f.level_count();
  std::vector<int> out;
  if (n <= cap) {
    for (int l = 0; l < n; ++l) out.push_back(l);
    return out;
  }
  for (int q = 0; q < cap; ++q) {
    out.push_back(static_cast<int>(std::lround(static_cast<double>(q) * (n - 1) / (cap - 1))));
  }
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

Line least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  Line l;
  l.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  l.intercept = my - l.slope * mx;
  l.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return l;
}

// Pieces of the barrier inequality at one sample:
//   value = T1 + K T2 + (c - A)(X + K R), X = |x - x0|^mu, R = rho^mu.
// In laplace mode T1, T2 are plain Laplacians and c = 0.
struct BarrierTerms {
  double T1 = 0.0;
  double T2 = 0.0;
  double c = 0.0;
  double X = 0.0;
  double R = 0.0;
};

BarrierTerms barrier_terms(const CoefficientSet& co, const DefiningFunction& rho, const Point& x,
                           double t, const Point& x0, double mu, bool laplace) {
  const int dim = co.dim;
  Eigen::Vector2d d = x - x0;
  if (dim == 1) d(1) = 0.0;
  const double dist = d.norm();
  Eigen::Matrix2d eye = Eigen::Matrix2d::Identity();
  if (dim == 1) eye(1, 1) = 0.0;

  const Eigen::Vector2d gX = mu * std::pow(dist, mu - 2.0) * d;
  const Eigen::Matrix2d hX =
      mu * std::pow(dist, mu - 2.0) * (eye + (mu - 2.0) * d * d.transpose() / (dist * dist));

  const double r = rho(x);
  Eigen::Vector2d g = rho.gradient(x);
  Eigen::Matrix2d h = rho.hessian(x);
  if (dim == 1) {
    g(1) = 0.0;
    h.row(1).setZero();
    h.col(1).setZero();
  }
  const Eigen::Vector2d gR = mu * std::pow(r, mu - 1.0) * g;
  const Eigen::Matrix2d hR =
      mu * (mu - 1.0) * std::pow(r, mu - 2.0) * g * g.transpose() + mu * std::pow(r, mu - 1.0) * h;

  BarrierTerms out;
  out.X = std::pow(dist, mu);
  out.R = std::pow(r, mu);
  if (laplace) {
    out.T1 = hX.trace();
    out.T2 = hR.trace();
    return out;
  }
  Eigen::Matrix2d a = co.a_at(x, t);
  Eigen::Vector2d b = co.b_at(x, t);
  if (dim == 1) {
    a.row(1).setZero();
    a.col(1).setZero();
    b(1) = 0.0;
  }
  out.T1 = r * r * (a.cwiseProduct(hX)).sum() + r * b.dot(gX);
  out.T2 = r * r * (a.cwiseProduct(hR)).sum() + r * b.dot(gR);
  out.c = co.c_at(x, t);
  return out;
}

// -value / X; the certificate margin is the smallest of these.
double barrier_ratio(const BarrierTerms& b, double A, double K) {
  const double value = b.T1 + K * b.T2 + (b.c - A) * (b.X + K * b.R);
  return -value / b.X;
}

std::vector<Point> local_lattice(const Domain& domain, const DefiningFunction& rho, const Point& x0,
                                 double r, int n) {
  std::vector<Point> pts;
  const Point lo = domain.lower();
  const Point hi = domain.upper();
  auto axis = [&](int k) {
    const double a = std::max(lo(k), x0(k) - r);
    const double b = std::min(hi(k), x0(k) + r);
    std::vector<double> v;
    for (int i = 1; i <= n; ++i) v.push_back(a + (b - a) * i / (n + 1));
    return v;
  };
  const auto xs = axis(0);
  const std::vector<double> ys = domain.dim() == 2 ? axis(1) : std::vector<double>{0.0};
  for (double y : ys) {
    for (double xv : xs) {
      const Point p(xv, y);
      Eigen::Vector2d d = p - x0;
      if (domain.dim() == 1) d(1) = 0.0;
      if (d.norm() > r || d.norm() < 1e-14) continue;
      if (!domain.contains(p, 0.0) || rho(p) <= 0.0) continue;
      pts.push_back(p);
    }
  }
  return pts;
}

struct Candidate {
  bool found = false;
  double K = 0.0;
  double C0 = -kInf;
  int worst = -1;
};

// Margin min_i ratio_i for K = 0, 1, 2, 4, ...; the first admissible K wins
// (C0 > 0, or >= 0 when `allow_zero`). Without one, the best margin is kept.
Candidate best_K(const std::vector<BarrierTerms>& terms, double A, int max_power,
                 bool allow_zero) {
  Candidate best_any;
  for (int q = -1; q <= max_power; ++q) {
    const double K = q < 0 ? 0.0 : std::ldexp(1.0, q);
    double C0 = kInf;
    int worst = -1;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double ratio = barrier_ratio(terms[i], A, K);
      if (!(ratio >= C0)) {
        C0 = ratio;
        worst = static_cast<int>(i);
      }
    }
    if (std::isnan(C0)) continue;
    const bool ok = allow_zero ? C0 >= 0.0 : C0 > 0.0;
    if (C0 > best_any.C0) best_any = Candidate{false, K, C0, worst};
    if (ok) return Candidate{true, K, C0, worst};
  }
  return best_any;
}

}  // namespace

MaxPrincipleReport check_max_principle(const SpaceTimeField& run, const IbvpProblem& problem,
                                       double tol) {
  MaxPrincipleReport rep;
  const auto& co = problem.coeffs;
  rep.min_f = kInf;
  rep.max_data = -kInf;
  for (int l = 0; l < run.level_count(); ++l) {
    const double t = run.times[l];
    for (int n = 0; n < run.node_count(); ++n) {
      const Point x = run.point(n);
      if (run.dim == 2 && co.a[1](x, t) != 0.0) {
        rep.reason = "cross-diffusion present";
        return rep;
      }
      rep.min_f = std::min(rep.min_f, co.f_at(x, t));
      if (l == 0) rep.max_data = std::max(rep.max_data, problem.phi(x, 0.0));
      if (is_boundary_node(run, n)) rep.max_data = std::max(rep.max_data, run.at(l, n));
    }
  }
  rep.max_value = -kInf;
  for (const auto& lv : run.levels) rep.max_value = std::max(rep.max_value, lv.maxCoeff());
  if (rep.min_f < 0.0) {
    rep.reason = fmt::format("f takes the value {:.6g} < 0", rep.min_f);
    return rep;
  }
  if (rep.max_data > tol) {
    rep.reason = fmt::format("parabolic boundary data reach {:.6g} > 0", rep.max_data);
    return rep;
  }
  rep.verdict = rep.max_value <= tol ? Verdict::pass : Verdict::fail;
  if (rep.verdict == Verdict::fail) {
    rep.reason = fmt::format("u reaches {:.6g}", rep.max_value);
  }
  return rep;
}

LinftyReport check_linfty_bound(const SpaceTimeField& run, const IbvpProblem& problem, double c0,
                                double tol) {
  LinftyReport rep;
  rep.c0 = c0;
  const auto& co = problem.coeffs;
  if (c0 < 0.0) {
    rep.reason = "c0 must be nonnegative";
    return rep;
  }

  const auto levels =
      co.time_independent() ? std::vector<int>{0} : sampled_levels(run, 33);
  const double x_min = run.x1.front();
  const double L = run.x1.back() - x_min;

  struct Sample {
    double a11r2;  // rho^2 a11
    double b1r;    // rho b1
    double gap;    // c - c0 (negative)
    double x;      // x1 - x_min
  };
  std::vector<Sample> lattice;
  double sup_c = -kInf;
  for (int l : levels) {
    const double t = run.times[l];
    for (int n = 0; n < run.node_count(); ++n) {
      const Point x = run.point(n);
      const double r = problem.rho(x);
      const double c = co.c_at(x, t);
      sup_c = std::max(sup_c, c);
      lattice.push_back({r * r * co.a_at(x, t)(0, 0), r * co.b_at(x, t)(0), c - c0, x(0) - x_min});
    }
  }
  if (sup_c >= c0) {
    rep.reason = fmt::format("sup c = {:.6g} is not below c0", sup_c);
    return rep;
  }

  rep.Phi = 0.0;
  rep.F = 0.0;
  rep.sup_u = run.sup_abs();
  for (int l = 0; l < run.level_count(); ++l) {
    const double t = run.times[l];
    for (int n = 0; n < run.node_count(); ++n) {
      if (l == 0 || is_boundary_node(run, n)) rep.Phi = std::max(rep.Phi, std::abs(run.at(l, n)));
      rep.F = std::max(rep.F, std::abs(co.f_at(run.point(n), t)));
    }
  }

  // Slab width r >= L, offset o in [0, r - L], and the smallest mu on a
  // geometric scan for which the sub-solution condition holds everywhere.
  bool any = false;
  for (int k = 0; k <= 12; ++k) {
    const double r = L * std::exp2(k / 4.0);
    for (int q = 0; q <= 4; ++q) {
      const double o = (r - L) * q / 4.0;
      for (int j = -80; j <= 56; ++j) {
        const double mu = std::exp2(j / 8.0);
        bool ok = true;
        for (const auto& s : lattice) {
          const double xp = s.x + o;
          const double lhs = s.a11r2 * mu * mu + r * s.b1r * mu -
                             s.gap * r * r * std::expm1(mu * (2.0 - xp / r));
          if (!(lhs >= 1.0)) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        const double KF = r * r * (std::exp(2.0 * mu) - std::exp(mu * o / r));
        if (!any || std::max(1.0, KF) < rep.C || (std::max(1.0, KF) == rep.C && KF < rep.K_F)) {
          any = true;
          rep.C = std::max(1.0, KF);
          rep.K_F = KF;
          rep.mu = mu;
          rep.r = r;
          rep.offset = o;
        }
        break;
      }
    }
  }
  if (!any) {
    rep.verdict = Verdict::fail;
    rep.reason = "no admissible mu in [2^-10, 2^7]";
    return rep;
  }

  bool dominated = true;
  rep.worst_ratio = 0.0;
  for (int l = 0; l < run.level_count(); ++l) {
    const double grow = std::exp(c0 * run.times[l]);
    for (int n = 0; n < run.node_count(); ++n) {
      const double xp = run.point(n)(0) - x_min + rep.offset;
      const double v =
          grow * (rep.Phi + rep.r * rep.r * (std::exp(2.0 * rep.mu) - std::exp(rep.mu * xp / rep.r)) * rep.F);
      const double u = std::abs(run.at(l, n));
      if (u > v + tol) dominated = false;
      if (v > 0.0) rep.worst_ratio = std::max(rep.worst_ratio, u / v);
    }
  }
  rep.sup_bound = rep.C * std::exp(c0 * run.times.back()) * (rep.Phi + rep.F);
  const bool bounded = rep.sup_u <= rep.sup_bound + tol;
  rep.verdict = dominated && bounded ? Verdict::pass : Verdict::fail;
  if (!dominated) rep.reason = "comparison function does not dominate |u|";
  else if (!bounded) rep.reason = "sup |u| exceeds the bound";
  return rep;
}

std::string to_string(BarrierMode mode) {
  switch (mode) {
    case BarrierMode::parabolic: return "parabolic";
    case BarrierMode::laplace: return "laplace";
    case BarrierMode::time_independent: return "time_independent";
  }
  return "unknown";
}

BarrierMode parse_barrier_mode(const std::string& name) {
  if (name == "parabolic") return BarrierMode::parabolic;
  if (name == "laplace") return BarrierMode::laplace;
  if (name == "time_independent") return BarrierMode::time_independent;
  throw ConfigError("unknown barrier mode '" + name + "'");
}

BarrierCertificate find_barrier(const CoefficientSet& coeffs, const DefiningFunction& rho,
                                const Domain& domain, double mu, const Point& x0, BarrierMode mode,
                                const BarrierOptions& opts) {
  if (!(mu > 0.0)) throw ArgumentError("barrier exponent must be positive");
  if (mode == BarrierMode::laplace && !(mu < 1.0)) {
    throw ArgumentError("laplace barrier needs mu in (0, 1)");
  }
  if (opts.lattice < 2 || opts.lattice_2d < 2 || opts.time_nodes < 1 || opts.max_power < 0 ||
      opts.radius_levels < 0) {
    throw ArgumentError("invalid barrier search options");
  }
  if (coeffs.dim != domain.dim()) throw ArgumentError("coefficient and domain dimensions differ");
  const CoefficientSet co =
      mode == BarrierMode::time_independent ? coeffs.limit_problem() : coeffs;

  BarrierCertificate cert;
  cert.mode = mode;
  cert.mu = mu;
  cert.x0 = x0;
  const int n = domain.dim() == 1 ? opts.lattice : opts.lattice_2d;
  const bool laplace = mode == BarrierMode::laplace;

  std::vector<double> times{0.0};
  if (mode == BarrierMode::parabolic && !co.time_independent()) {
    times.clear();
    for (int q = 0; q < opts.time_nodes; ++q) {
      times.push_back(opts.time_nodes == 1 ? 0.0 : opts.horizon * q / (opts.time_nodes - 1));
    }
  }

  double best_margin = -kInf;
  auto adopt = [&](const std::vector<SpaceTimeSample>& lat, double r, double A,
                   const Candidate& c) {
    cert.found = c.found;
    cert.r = r;
    cert.A = A;
    cert.K = c.K;
    cert.C0 = c.C0;
    cert.worst_ratio = c.C0;
    if (c.worst >= 0) {
      cert.worst = lat[c.worst].x;
      cert.worst_t = lat[c.worst].t;
    }
    cert.lattice = lat;
  };

  // Parabolic mode covers the whole domain; the local modes shrink r.
  const int radius_levels = mode == BarrierMode::parabolic ? 0 : opts.radius_levels;
  for (int j = 0; j <= radius_levels && !cert.found; ++j) {
    const double r = domain.diameter() * std::ldexp(1.0, -j);
    const auto pts = local_lattice(domain, rho, x0, r, n);
    if (pts.empty()) continue;
    std::vector<SpaceTimeSample> lat;
    std::vector<BarrierTerms> terms;
    for (double t : times) {
      for (const auto& p : pts) {
        lat.push_back({p, t});
        terms.push_back(barrier_terms(co, rho, p, t, x0, mu, laplace));
      }
    }
    if (mode == BarrierMode::parabolic) {
      for (int q = 0; q <= opts.max_power; ++q) {
        const double A = std::ldexp(1.0, q);
        const Candidate c = best_K(terms, A, opts.max_power, false);
        if (c.found || c.C0 > best_margin) {
          best_margin = c.C0;
          adopt(lat, r, A, c);
        }
        if (c.found) break;
      }
    } else {
      const Candidate c = best_K(terms, 0.0, opts.max_power, laplace);
      if (c.found || c.C0 > best_margin) {
        best_margin = c.C0;
        adopt(lat, r, 0.0, c);
      }
    }
  }

  if (!cert.found) {
    cert.diagnostic = fmt::format("no admissible constants; best margin {:.6g} at x = ({:.6g}, {:.6g})",
                                  best_margin, cert.worst(0), cert.worst(1));
    if (mode == BarrierMode::time_independent) {
      const auto bps = boundary_points(domain, rho, 64);
      for (const auto& bp : bps) {
        const double P = char_poly_at(co, bp)(mu);
        if (P >= 0.0) {
          cert.diagnostic += fmt::format("; P(mu) = {:.6g} >= 0 at boundary point {:.6g}", P, bp.param);
          break;
        }
      }
    }
    return cert;
  }

  // Onset for the time-dependent operator: the first T of 0, 1, 2, 4, ...
  // after which the actual coefficients keep a fraction of the margin.
  if (mode == BarrierMode::time_independent && !coeffs.time_independent()) {
    cert.onset = kInf;
    for (int q = -1; q <= 10; ++q) {
      const double T = q < 0 ? 0.0 : std::ldexp(1.0, q);
      bool ok = true;
      for (int s = 0; s < opts.time_nodes && ok; ++s) {
        const double t = opts.time_nodes == 1 ? T : T + (T + 1.0) * s / (opts.time_nodes - 1);
        for (const auto& smp : cert.lattice) {
          const auto b = barrier_terms(coeffs, rho, smp.x, t, x0, mu, false);
          if (!(barrier_ratio(b, 0.0, cert.K) >= opts.onset_tol * cert.C0)) {
            ok = false;
            break;
          }
        }
      }
      if (ok) {
        cert.onset = T;
        break;
      }
    }
    if (!std::isfinite(cert.onset)) {
      cert.found = false;
      cert.diagnostic = "limit barrier found but no onset time up to 1024";
    }
  }
  return cert;
}

double recheck_barrier(const BarrierCertificate& cert, const CoefficientSet& coeffs,
                       const DefiningFunction& rho) {
  const CoefficientSet co =
      cert.mode == BarrierMode::time_independent ? coeffs.limit_problem() : coeffs;
  const bool laplace = cert.mode == BarrierMode::laplace;
  double slack = kInf;
  for (const auto& s : cert.lattice) {
    const auto b = barrier_terms(co, rho, s.x, s.t, cert.x0, cert.mu, laplace);
    slack = std::min(slack, barrier_ratio(b, cert.A, cert.K) - cert.C0);
  }
  return slack;
}

DecayReport decay_certificate(const SpaceTimeField& run, const std::vector<Point>& x0s,
                              double alpha, double window) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in (0, 1]");
  if (x0s.empty()) throw ArgumentError("decay certificate needs at least one boundary point");
  if (!(window > 0.0)) throw ArgumentError("window length must be positive");
  DecayReport rep;
  rep.alpha = alpha;
  rep.times = run.times;
  for (int l = 0; l < run.level_count(); ++l) {
    double sup = 0.0;
    for (const auto& x0 : x0s) {
      const double h = interpolate(run, x0, l);
      for (int n = 0; n < run.node_count(); ++n) {
        Eigen::Vector2d d = run.point(n) - x0;
        if (run.dim == 1) d(1) = 0.0;
        const double dist = d.norm();
        if (dist < 1e-14) continue;
        sup = std::max(sup, std::abs(run.at(l, n) - h) / std::pow(dist, alpha));
      }
    }
    rep.sup_quotient.push_back(sup);
  }

  const double t0 = run.times.front();
  const double t1 = run.times.back();
  for (int w = 0; t0 + (w + 1) * window <= t1 + 1e-9; ++w) {
    const double T = t0 + w * window;
    double C = 0.0;
    for (int l = 0; l < run.level_count(); ++l) {
      if (run.times[l] >= T - 1e-12 && run.times[l] <= T + window + 1e-12) {
        C = std::max(C, rep.sup_quotient[l]);
      }
    }
    rep.window_T.push_back(T);
    rep.window_C.push_back(C);
  }

  rep.bounded = std::all_of(rep.sup_quotient.begin(), rep.sup_quotient.end(),
                            [](double v) { return std::isfinite(v); });
  rep.decaying = rep.bounded && rep.window_C.size() >= 2;
  for (std::size_t i = 1; i < rep.window_C.size() && rep.decaying; ++i) {
    const double prev = rep.window_C[i - 1];
    const double cur = rep.window_C[i];
    if (!(cur < prev || (cur == 0.0 && prev == 0.0))) rep.decaying = false;
  }
  const RateFit fit = fit_rate(rep.window_T, rep.window_C);
  rep.fitted_rate = fit.model == "exponential" ? fit.rate : 0.0;
  return rep;
}

RateFit fit_rate(const std::vector<double>& T, const std::vector<double>& values,
                 double tail_fraction, double r2_min) {
  if (T.size() != values.size()) throw ArgumentError("rate fit: size mismatch");
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw ArgumentError("rate fit: tail fraction must lie in (0, 1]");
  }
  RateFit fit;
  const auto n = T.size();
  const auto keep = std::max<std::size_t>(
      2, static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(n))));
  const std::size_t first = n > keep ? n - keep : 0;

  std::vector<double> t;
  std::vector<double> y;
  bool all_zero = true;
  for (std::size_t i = first; i < n; ++i) {
    if (values[i] != 0.0) all_zero = false;
    if (values[i] > 0.0 && std::isfinite(values[i])) {
      t.push_back(T[i]);
      y.push_back(std::log(values[i]));
    }
  }
  if (all_zero && n > first) {
    fit.model = "zero";
    fit.accepted = true;
    fit.r2 = 1.0;
    return fit;
  }
  if (t.size() < 2) return fit;

  const Line e = least_squares(t, y);
  if (e.r2 >= r2_min) {
    return RateFit{"exponential", -e.slope, e.intercept, e.r2, true};
  }
  std::vector<double> lt;
  for (double v : t) lt.push_back(std::log1p(v));
  const Line p = least_squares(lt, y);
  if (p.r2 >= r2_min) {
    return RateFit{"polynomial", -p.slope, p.intercept, p.r2, true};
  }
  return p.r2 > e.r2 ? RateFit{"polynomial", -p.slope, p.intercept, p.r2, false}
                     : RateFit{"exponential", -e.slope, e.intercept, e.r2, false};
}

LongTimeReport long_time_report(const LongTimeRun& run, const SpaceTimeField* v,
                                const DefiningFunction& rho,
                                const std::vector<ConvergenceOptions>& classes, int node_stride,
                                int level_stride) {
  if (run.windows.empty()) throw ArgumentError("long-time report needs at least one window");
  if (v != nullptr && v->node_count() != run.field.node_count()) {
    throw ArgumentError("stationary field does not share the run's nodes");
  }
  LongTimeReport rep;
  for (const auto& w : run.windows) {
    double sup = 0.0;
    for (const auto& lv : w.levels) {
      const double d = v != nullptr ? (lv - v->levels.front()).cwiseAbs().maxCoeff()
                                    : lv.cwiseAbs().maxCoeff();
      sup = std::max(sup, d);
    }
    rep.T.push_back(w.times.front());
    rep.linf.push_back(sup);
  }
  rep.rate = fit_rate(rep.T, rep.linf);
  const auto& first = run.windows.front();
  const double length = first.times.back() - first.times.front();
  for (const auto& opts : classes) {
    rep.traces.push_back(
        windowed_convergence(run.field, v, rho, rep.T, length, opts, node_stride, level_stride));
  }
  return rep;
}

}  // namespace degen
