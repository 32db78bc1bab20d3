#include "degen/holder_norms.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <tuple>

#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

double distance(const SpaceTimeSample& X, const SpaceTimeSample& Y, SeminormKind kind) {
  switch (kind) {
    case SeminormKind::parabolic: return parabolic_distance(X, Y);
    case SeminormKind::space: return (X.x - Y.x).norm();
    case SeminormKind::time: return std::sqrt(std::abs(X.t - Y.t));
    case SeminormKind::none: break;
  }
  return 0.0;
}

double power_alpha(double d, double alpha) { return alpha == 0.5 ? std::sqrt(d) : std::pow(d, alpha); }

/// Running maximum with lexicographic tie-break on the normalised pair.
struct PairMax {
  double value = 0.0;
  int i = -1;
  int j = -1;
  std::size_t pairs = 0;

  void offer(double q, int a, int b) {
    ++pairs;
    if (a > b) std::swap(a, b);
    if (q > value || (q == value && i >= 0 && std::tie(a, b) < std::tie(i, j))) {
      value = q;
      i = a;
      j = b;
    }
  }
};

std::vector<std::vector<int>> group_indices(const std::vector<SpaceTimeSample>& pts,
                                            SeminormKind kind) {
  if (kind == SeminormKind::parabolic) {
    std::vector<int> all(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) all[k] = static_cast<int>(k);
    return {all};
  }
  std::map<std::tuple<double, double, double>, std::vector<int>> groups;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const auto& p = pts[k];
    const auto key = kind == SeminormKind::space ? std::make_tuple(p.t, 0.0, 0.0)
                                                 : std::make_tuple(p.x(0), p.x(1), 0.0);
    groups[key].push_back(static_cast<int>(k));
  }
  std::vector<std::vector<int>> out;
  for (auto& [key, g] : groups)
    if (g.size() >= 2) out.push_back(std::move(g));
  return out;
}

std::vector<std::array<int, 2>> multi_indices(int order, int dim) {
  std::vector<std::array<int, 2>> out;
  if (dim == 1) {
    out.push_back({order, 0});
    return out;
  }
  for (int j = 0; j <= order; ++j) out.push_back({order - j, j});
  return out;
}

/// Fornberg weights for the m-th derivative at z on the given nodes.
std::vector<double> fd_weights(double z, const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size()) - 1;
  std::vector<std::vector<double>> c(n + 1, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0;
  double c4 = x[0] - z;
  c[0][0] = 1.0;
  for (int i = 1; i <= n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i] - z;
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n + 1);
  for (int i = 0; i <= n; ++i) w[i] = c[i][m];
  return w;
}

int stencil_size(int m) { return m % 2 == 0 ? m + 1 : m + 2; }

/// m-th derivative along a line of values at coordinates x.
Eigen::VectorXd differentiate_line(const std::vector<double>& x, const Eigen::VectorXd& v, int m) {
  const int n = static_cast<int>(x.size());
  const int sz = stencil_size(m);
  Eigen::VectorXd out(n);
  std::vector<double> nodes(sz);
  for (int i = 0; i < n; ++i) {
    const int lo = std::clamp(i - sz / 2, 0, n - sz);
    for (int q = 0; q < sz; ++q) nodes[q] = x[lo + q];
    const auto w = fd_weights(x[i], nodes, m);
    double s = 0.0;
    for (int q = 0; q < sz; ++q) s += w[q] * v(lo + q);
    out(i) = s;
  }
  return out;
}

std::vector<double> dyadic_depths(const FitOptions& opts) {
  if (opts.j_max - opts.j_min + 1 < 4)
    throw ArgumentError("exponent fit: need at least four dyadic depths");
  if (opts.drop < 0 || opts.j_max - opts.j_min + 1 - opts.drop < 2)
    throw ArgumentError("exponent fit: too many depths dropped");
  std::vector<double> d;
  for (int j = opts.j_min; j <= opts.j_max; ++j) d.push_back(std::ldexp(1.0, -j));
  return d;
}

}  // namespace

double parabolic_distance(const SpaceTimeSample& X, const SpaceTimeSample& Y) {
  return std::max((X.x - Y.x).norm(), std::sqrt(std::abs(X.t - Y.t)));
}

SeminormEstimate holder_seminorm(const std::vector<SpaceTimeSample>& points,
                                 const Eigen::VectorXd& values, double alpha, SeminormKind kind,
                                 const PairSampling& sampling) {
  if (points.size() < 2) throw ArgumentError("holder_seminorm: need at least two samples");
  if (static_cast<std::size_t>(values.size()) != points.size())
    throw ArgumentError("holder_seminorm: values and samples differ in size");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ArgumentError(fmt::format("holder_seminorm: alpha must lie in (0, 1] (got {})", alpha));
  SeminormEstimate est;
  if (kind == SeminormKind::none) return est;

  const auto groups = group_indices(points, kind);
  PairMax best;
  bool exhaustive = true;
  std::mt19937_64 rng(sampling.seed);
  std::size_t large = 0;
  for (const auto& g : groups)
    if (g.size() > sampling.all_pairs_limit) ++large;
  const std::size_t draws =
      large == 0 ? 0 : std::max<std::size_t>(1000, sampling.random_pairs / large);

  auto visit = [&](int a, int b) {
    const double d = distance(points[a], points[b], kind);
    if (d <= 0.0) return;
    best.offer(std::abs(values(a) - values(b)) / power_alpha(d, alpha), a, b);
  };
  for (const auto& g : groups) {
    const std::size_t n = g.size();
    if (n <= sampling.all_pairs_limit) {
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) visit(g[p], g[q]);
    } else {
      exhaustive = false;
      for (std::size_t r = 0; r < draws; ++r) {
        const std::size_t p = rng() % n;
        const std::size_t q = rng() % n;
        if (p != q) visit(g[p], g[q]);
      }
    }
  }
  est.value = best.value;
  est.first = best.i;
  est.second = best.j;
  est.pairs = best.pairs;
  if (best.i >= 0) {
    est.X = points[best.i];
    est.Y = points[best.j];
  }
  est.strategy = exhaustive ? "all_pairs"
                            : fmt::format("random_pairs(draws={},seed={})", draws, sampling.seed);
  return est;
}

std::string to_string(NormClass cls) {
  switch (cls) {
    case NormClass::holder: return "holder";
    case NormClass::weighted: return "weighted";
    case NormClass::holder_star: return "holder_star";
    case NormClass::weighted_star: return "weighted_star";
    case NormClass::slice_holder: return "slice_holder";
    case NormClass::slice_weighted: return "slice_weighted";
  }
  return "unknown";
}

NormClass parse_norm_class(const std::string& name) {
  for (NormClass c : {NormClass::holder, NormClass::weighted, NormClass::holder_star,
                      NormClass::weighted_star, NormClass::slice_holder, NormClass::slice_weighted})
    if (to_string(c) == name) return c;
  throw ConfigError(fmt::format("unknown norm class '{}'", name));
}

std::string NormComponent::label() const {
  std::string s;
  if (weight > 0) s += fmt::format("rho^{} ", weight);
  if (beta[0] + beta[1] > 0) s += fmt::format("D({},{}) ", beta[0], beta[1]);
  if (time_order > 0) s += fmt::format("dt^{} ", time_order);
  s += "u";
  switch (seminorm) {
    case SeminormKind::none: s += " [sup]"; break;
    case SeminormKind::parabolic: s += " [C^a]"; break;
    case SeminormKind::space: s += " [C^a_x]"; break;
    case SeminormKind::time: s += " [C^a_t]"; break;
  }
  return s;
}

std::vector<NormComponent> norm_components(NormClass cls, int k, int dim) {
  if (k < 0) throw ArgumentError("norm_components: k must be >= 0");
  if (dim != 1 && dim != 2) throw ArgumentError("norm_components: dim must be 1 or 2");
  std::vector<NormComponent> out;
  auto add = [&](int order, int time_order, int weight, SeminormKind kind) {
    for (const auto& b : multi_indices(order, dim)) out.push_back({b, time_order, weight, kind});
  };
  using K = SeminormKind;
  switch (cls) {
    case NormClass::holder:
      for (int i = 0; 2 * i <= k; ++i)
        for (int m = 0; m + 2 * i <= k; ++m)
          add(m, i, 0, m + 2 * i == k ? K::parabolic : K::none);
      break;
    case NormClass::holder_star:
      if (k == 0) {
        add(0, 0, 0, K::space);
        break;
      }
      for (int m = 0; m <= k; ++m) add(m, 0, 0, K::parabolic);
      for (int i = 1; 2 * i <= k; ++i)
        for (int m = 0; m + 2 * i <= k; ++m) add(m, i, 0, K::space);
      break;
    case NormClass::weighted:
    case NormClass::weighted_star: {
      const K tk = cls == NormClass::weighted ? K::parabolic : K::space;
      for (int m = 0; m <= k; ++m) add(m, 0, 0, K::parabolic);
      for (int j = 1; j <= 2; ++j) add(k + j, 0, j, K::parabolic);
      for (int i = 1; 2 * i <= k + 2; ++i)
        for (int m = 0; m + 2 * i <= k + 2; ++m) add(m, i, 0, tk);
      break;
    }
    case NormClass::slice_holder:
      for (int m = 0; m <= k; ++m) add(m, 0, 0, m == k ? K::space : K::none);
      break;
    case NormClass::slice_weighted:
      for (int m = 0; m < k; ++m) add(m, 0, 0, K::none);
      add(k, 0, 0, K::space);
      for (int j = 1; j <= 2; ++j) add(k + j, 0, j, K::space);
      break;
  }
  return out;
}

ExprSampler::ExprSampler(Expr u, const DefiningFunction& rho, std::vector<SpaceTimeSample> points)
    : u_(std::move(u)), points_(std::move(points)), rho_values_(points_.size()) {
  for (std::size_t k = 0; k < points_.size(); ++k) rho_values_(k) = rho(points_[k].x);
}

Eigen::VectorXd ExprSampler::derivative(std::array<int, 2> beta, int time_order) const {
  const Expr d = u_.derivative(beta, time_order);
  Eigen::VectorXd v(points_.size());
  for (std::size_t k = 0; k < points_.size(); ++k) v(k) = d(points_[k].x, points_[k].t);
  return v;
}

GridSampler::GridSampler(SpaceTimeField field, const DefiningFunction& rho, int node_stride,
                         int level_stride)
    : field_(std::move(field)) {
  if (node_stride < 1 || level_stride < 1)
    throw ArgumentError("GridSampler: strides must be >= 1");
  if (field_.level_count() == 0) throw ConfigError("GridSampler: field has no levels");
  auto strided = [](int n, int s) {
    std::vector<int> v;
    for (int i = 0; i < n; i += s) v.push_back(i);
    if (v.back() != n - 1) v.push_back(n - 1);
    return v;
  };
  const auto is = strided(field_.n1(), node_stride);
  const auto js = field_.dim == 1 ? std::vector<int>{0} : strided(field_.n2(), node_stride);
  for (int j : js)
    for (int i : is) nodes_.push_back(field_.index(i, j));
  levels_ = strided(field_.level_count(), level_stride);
  for (int l : levels_)
    for (int k : nodes_) points_.push_back({field_.point(k), field_.times[l]});
  rho_values_.resize(static_cast<Eigen::Index>(points_.size()));
  for (std::size_t q = 0; q < points_.size(); ++q) rho_values_(q) = rho(points_[q].x);
}

Eigen::VectorXd GridSampler::derivative(std::array<int, 2> beta, int time_order) const {
  const SpaceTimeField d =
      beta[0] == 0 && beta[1] == 0 && time_order == 0 ? field_ : differentiate(field_, beta, time_order);
  Eigen::VectorXd v(points_.size());
  std::size_t q = 0;
  for (int l : levels_)
    for (int k : nodes_) v(q++) = d.at(l, k);
  return v;
}

SpaceTimeField differentiate(const SpaceTimeField& field, std::array<int, 2> beta, int time_order) {
  if (beta[0] < 0 || beta[1] < 0 || time_order < 0)
    throw ArgumentError("differentiate: negative order");
  if (field.dim == 1 && beta[1] > 0)
    throw ConfigError("differentiate: no x2 derivatives of a 1-D field");
  SpaceTimeField out = field;
  const int n1 = field.n1(), n2 = field.n2();
  auto need = [](int available, int m, const char* axis) {
    if (m > 0 && available < stencil_size(m))
      throw ConfigError(fmt::format("differentiate: {} nodes along {} cannot supply order {}",
                                    available, axis, m));
  };
  need(n1, beta[0], "x1");
  need(n2, beta[1], "x2");
  need(field.level_count(), time_order, "t");
  for (auto& lv : out.levels) {
    if (beta[0] > 0) {
      for (int j = 0; j < n2; ++j) {
        Eigen::VectorXd line(n1);
        for (int i = 0; i < n1; ++i) line(i) = lv(field.index(i, j));
        line = differentiate_line(field.x1, line, beta[0]);
        for (int i = 0; i < n1; ++i) lv(field.index(i, j)) = line(i);
      }
    }
    if (beta[1] > 0) {
      for (int i = 0; i < n1; ++i) {
        Eigen::VectorXd line(n2);
        for (int j = 0; j < n2; ++j) line(j) = lv(field.index(i, j));
        line = differentiate_line(field.x2, line, beta[1]);
        for (int j = 0; j < n2; ++j) lv(field.index(i, j)) = line(j);
      }
    }
  }
  if (time_order > 0) {
    const int L = out.level_count();
    for (int k = 0; k < out.node_count(); ++k) {
      Eigen::VectorXd line(L);
      for (int l = 0; l < L; ++l) line(l) = out.levels[l](k);
      line = differentiate_line(out.times, line, time_order);
      for (int l = 0; l < L; ++l) out.levels[l](k) = line(l);
    }
  }
  return out;
}

double interpolate(const SpaceTimeField& field, const Point& x, int level) {
  if (level < 0 || level >= field.level_count())
    throw ArgumentError("interpolate: level out of range");
  auto locate = [](const std::vector<double>& nodes, double v, double& w) {
    const double slack = 1e-12 * (1.0 + std::abs(nodes.back() - nodes.front()));
    if (v < nodes.front() - slack || v > nodes.back() + slack)
      throw DomainError(fmt::format("interpolate: coordinate {} outside the grid", v));
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), v);
    int i = static_cast<int>(it - nodes.begin()) - 1;
    i = std::clamp(i, 0, static_cast<int>(nodes.size()) - 2);
    w = std::clamp((v - nodes[i]) / (nodes[i + 1] - nodes[i]), 0.0, 1.0);
    return i;
  };
  const auto& v = field.levels[level];
  double w1 = 0.0;
  const int i = locate(field.x1, x(0), w1);
  if (field.dim == 1) return (1.0 - w1) * v(i) + w1 * v(i + 1);
  double w2 = 0.0;
  const int j = locate(field.x2, x(1), w2);
  return (1.0 - w1) * (1.0 - w2) * v(field.index(i, j)) + w1 * (1.0 - w2) * v(field.index(i + 1, j)) +
         (1.0 - w1) * w2 * v(field.index(i, j + 1)) + w1 * w2 * v(field.index(i + 1, j + 1));
}

HolderReport weighted_norm(const DerivativeSampler& sampler, NormClass cls, int k, double alpha,
                           const PairSampling& sampling) {
  const auto& pts = sampler.points();
  if (pts.empty()) throw ConfigError("weighted_norm: no samples");
  const int dim = std::all_of(pts.begin(), pts.end(), [](const auto& p) { return p.x(1) == 0.0; })
                      ? 1
                      : 2;
  HolderReport rep;
  rep.cls = cls;
  rep.k = k;
  rep.alpha = alpha;
  const Eigen::VectorXd rho = sampler.rho();
  for (const auto& comp : norm_components(cls, k, dim)) {
    Eigen::VectorXd v = sampler.derivative(comp.beta, comp.time_order);
    if (comp.weight > 0) v = v.cwiseProduct(rho.array().pow(comp.weight).matrix());
    if (!v.allFinite())
      throw NumericError(fmt::format("weighted_norm: non-finite values in {}", comp.label()));
    ComponentReport cr;
    cr.component = comp;
    Eigen::Index arg = 0;
    cr.sup = v.cwiseAbs().maxCoeff(&arg);
    cr.sup_at = pts[arg];
    if (comp.seminorm != SeminormKind::none && pts.size() >= 2) {
      cr.seminorm = holder_seminorm(pts, v, alpha, comp.seminorm, sampling);
      if (rep.strategy.empty() || cr.seminorm.strategy != "all_pairs")
        rep.strategy = cr.seminorm.strategy;
    }
    rep.total += cr.total();
    rep.components.push_back(std::move(cr));
  }
  if (rep.strategy.empty()) rep.strategy = "sup_only";
  return rep;
}

std::vector<MembershipReport> check_membership(const Expr& u, const DefiningFunction& rho,
                                               const Domain& domain, int k,
                                               const std::vector<double>& times,
                                               int boundary_samples) {
  if (k < 0) throw ArgumentError("check_membership: k must be >= 0");
  if (times.empty()) throw ArgumentError("check_membership: need at least one time");
  const SmoothField f(u);
  const auto pts = boundary_points(domain, rho, boundary_samples);
  std::vector<MembershipReport> out;
  for (const auto& bp : pts) {
    for (int j = 1; j <= 2; ++j) {
      std::vector<Expr> ders;
      for (const auto& b : multi_indices(k + j, domain.dim())) ders.push_back(f.derivative(b, 0));
      MembershipReport rep;
      rep.weight = j;
      rep.param = bp.param;
      for (int e = 4; e <= 14; ++e) {
        const double d = std::ldexp(1.0, -e);
        const Point x = bp.x + d * bp.normal;
        const double w = std::pow(rho(x), j);
        double m = 0.0;
        for (double t : times)
          for (const auto& D : ders) m = std::max(m, std::abs(w * D(x, t)));
        rep.depths.push_back(d);
        rep.profile.push_back(m);
      }
      rep.smallest = rep.profile.back();
      const auto fit = fit_power_law(rep.depths, rep.profile, 2);
      rep.rate = fit.defined ? fit.alpha : 0.0;
      const double top = *std::max_element(rep.profile.begin(), rep.profile.end());
      rep.vanishes = top < 1e-12 || (fit.defined && fit.alpha > 0.05);
      out.push_back(std::move(rep));
    }
  }
  return out;
}

ExponentFit fit_power_law(const std::vector<double>& depths, const std::vector<double>& sups,
                          int drop) {
  if (depths.size() != sups.size()) throw ArgumentError("fit_power_law: size mismatch");
  ExponentFit fit;
  fit.depths = depths;
  fit.sups = sups;
  std::vector<double> X, Y;
  for (std::size_t q = static_cast<std::size_t>(std::max(drop, 0)); q < depths.size(); ++q) {
    if (sups[q] > 0.0 && depths[q] > 0.0) {
      X.push_back(std::log(depths[q]));
      Y.push_back(std::log(sups[q]));
    }
  }
  if (X.size() < 2) return fit;
  const double n = static_cast<double>(X.size());
  double mx = 0, my = 0;
  for (std::size_t q = 0; q < X.size(); ++q) {
    mx += X[q];
    my += Y[q];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t q = 0; q < X.size(); ++q) {
    sxx += (X[q] - mx) * (X[q] - mx);
    sxy += (X[q] - mx) * (Y[q] - my);
    syy += (Y[q] - my) * (Y[q] - my);
  }
  if (sxx == 0.0) return fit;
  fit.alpha = sxy / sxx;
  fit.log_constant = my - fit.alpha * mx;
  double ss = 0.0;
  for (std::size_t q = 0; q < X.size(); ++q) {
    const double r = Y[q] - (fit.log_constant + fit.alpha * X[q]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.r2 = syy > 0.0 ? 1.0 - ss / syy : 1.0;
  fit.defined = true;
  return fit;
}

ExponentFit fit_boundary_exponent(const std::function<double(const Point&, double)>& u,
                                  const std::function<double(double)>& h,
                                  const BoundaryPoint& x0, const std::vector<double>& times,
                                  const FitOptions& opts) {
  if (times.empty()) throw ArgumentError("fit_boundary_exponent: need at least one time");
  const auto depths = dyadic_depths(opts);
  std::vector<double> hv(times.size());
  for (std::size_t l = 0; l < times.size(); ++l) hv[l] = h(times[l]);
  std::vector<double> sups;
  for (double d : depths) {
    const Point x = x0.x + d * x0.normal;
    double m = 0.0;
    for (std::size_t l = 0; l < times.size(); ++l) m = std::max(m, std::abs(u(x, times[l]) - hv[l]));
    sups.push_back(m);
  }
  return fit_power_law(depths, sups, opts.drop);
}

ExponentFit fit_boundary_exponent(const SpaceTimeField& u, const std::vector<double>& h,
                                  const BoundaryPoint& x0, const FitOptions& opts) {
  if (static_cast<int>(h.size()) != u.level_count())
    throw ArgumentError("fit_boundary_exponent: one trace value per stored level required");
  const auto depths = dyadic_depths(opts);
  std::vector<double> sups;
  for (double d : depths) {
    const Point x = x0.x + d * x0.normal;
    double m = 0.0;
    for (int l = 0; l < u.level_count(); ++l)
      m = std::max(m, std::abs(interpolate(u, x, l) - h[l]));
    sups.push_back(m);
  }
  return fit_power_law(depths, sups, opts.drop);
}

ConvergenceTrace windowed_convergence(
    const std::function<std::unique_ptr<DerivativeSampler>(double, double)>& make_sampler,
    const std::vector<double>& starts, double length, const ConvergenceOptions& opts) {
  if (!(length > 0.0)) throw ArgumentError("windowed_convergence: window length must be > 0");
  if (starts.empty()) throw ArgumentError("windowed_convergence: no windows");
  ConvergenceTrace tr;
  tr.cls = opts.cls;
  tr.k = opts.k;
  tr.alpha = opts.alpha;
  tr.epsilon = opts.epsilon;
  for (double T : starts) {
    const auto sampler = make_sampler(T, T + length);
    WindowValue w;
    w.T = T;
    w.report = weighted_norm(*sampler, opts.cls, opts.k, opts.alpha, opts.sampling);
    w.value = w.report.total;
    tr.windows.push_back(std::move(w));
  }
  const int n = static_cast<int>(tr.windows.size());
  const int tail = opts.tail <= 0 ? n : std::min(opts.tail, n);
  tr.decreasing = true;
  for (int q = n - tail + 1; q < n; ++q) {
    const double a = tr.windows[q - 1].value, b = tr.windows[q].value;
    if (!(b < a || (a == 0.0 && b == 0.0))) tr.decreasing = false;
  }
  tr.converging = tr.decreasing && tr.windows.back().value <= opts.epsilon;
  return tr;
}

ConvergenceTrace windowed_convergence(const Expr& u, const Expr& g, const DefiningFunction& rho,
                                      const std::vector<Point>& space, int times_per_window,
                                      const std::vector<double>& starts, double length,
                                      const ConvergenceOptions& opts) {
  if (times_per_window < 2) throw ArgumentError("windowed_convergence: need two times per window");
  const Expr diff = u - g;
  return windowed_convergence(
      [&](double T0, double T1) -> std::unique_ptr<DerivativeSampler> {
        std::vector<double> times(times_per_window);
        for (int q = 0; q < times_per_window; ++q)
          times[q] = T0 + (T1 - T0) * q / (times_per_window - 1);
        return std::make_unique<ExprSampler>(diff, rho, space_time_lattice(space, times));
      },
      starts, length, opts);
}

ConvergenceTrace windowed_convergence(const SpaceTimeField& u, const SpaceTimeField* g,
                                      const DefiningFunction& rho,
                                      const std::vector<double>& starts, double length,
                                      const ConvergenceOptions& opts, int node_stride,
                                      int level_stride) {
  if (g && g->node_count() != u.node_count())
    throw ArgumentError("windowed_convergence: u and g live on different grids");
  return windowed_convergence(
      [&](double T0, double T1) -> std::unique_ptr<DerivativeSampler> {
        SpaceTimeField w = u.window(T0, T1);
        if (w.level_count() == 0)
          throw ConfigError(fmt::format("windowed_convergence: no stored levels in [{}, {}]", T0, T1));
        if (g)
          for (auto& lv : w.levels) lv -= g->levels.at(0);
        return std::make_unique<GridSampler>(std::move(w), rho, node_stride, level_stride);
      },
      starts, length, opts);
}

HolderReport slice_norm(const Expr& u, const DefiningFunction& rho, const std::vector<Point>& space,
                        double t, NormClass cls, int k, double alpha, const PairSampling& sampling) {
  if (cls != NormClass::slice_holder && cls != NormClass::slice_weighted)
    throw ArgumentError("slice_norm: use a slice norm class");
  const ExprSampler s(u, rho, space_time_lattice(space, {t}));
  return weighted_norm(s, cls, k, alpha, sampling);
}

std::vector<Point> norm_lattice(const Domain& domain, int N, double gamma) {
  if (N < 2) throw ArgumentError("norm_lattice: N must be >= 2");
  std::vector<Point> out;
  switch (domain.kind()) {
    case DomainKind::interval: {
      const auto x = graded_nodes(domain.a(), domain.b(), N, gamma);
      for (int i = 1; i < N; ++i) out.emplace_back(x[i], 0.0);
      break;
    }
    case DomainKind::half_strip: {
      const double r = domain.halfwidth();
      const auto y = graded_nodes_one_sided(r, N, gamma);
      for (int j = 1; j <= N; ++j)
        for (int i = 0; i <= N; ++i) out.emplace_back(-r + 2.0 * r * i / N, y[j]);
      break;
    }
    case DomainKind::disk: {
      const double R = domain.radius();
      const double pi = std::acos(-1.0);
      for (int i = 1; i < N; ++i) {
        const double depth = R * std::pow(static_cast<double>(i) / N, gamma);
        const int m = 4 * N;
        for (int q = 0; q < m; ++q) {
          const double th = 2.0 * pi * q / m;
          out.push_back(domain.center() + (R - depth) * Point(std::cos(th), std::sin(th)));
        }
      }
      out.push_back(domain.center());
      break;
    }
  }
  return out;
}

std::vector<SpaceTimeSample> space_time_lattice(const std::vector<Point>& space,
                                                const std::vector<double>& times) {
  std::vector<SpaceTimeSample> out;
  out.reserve(space.size() * times.size());
  for (double t : times)
    for (const auto& x : space) out.push_back({x, t});
  return out;
}

Point nearest_boundary_point(const Domain& domain, const Point& x) {
  switch (domain.kind()) {
    case DomainKind::interval:
      return Point(x(0) - domain.a() <= domain.b() - x(0) ? domain.a() : domain.b(), 0.0);
    case DomainKind::half_strip: return Point(x(0), 0.0);
    case DomainKind::disk: {
      const Point v = x - domain.center();
      const double r = v.norm();
      if (r == 0.0) return domain.center() + Point(domain.radius(), 0.0);
      return domain.center() + domain.radius() / r * v;
    }
  }
  return x;
}

AssemblyInputs measure_assembly(const std::vector<SpaceTimeSample>& points,
                                const Eigen::VectorXd& w,
                                const std::function<double(const Point&, double)>& w0,
                                const Domain& domain, double alpha,
                                const PairSampling& sampling) {
  if (points.size() < 2) throw ArgumentError("measure_assembly: need at least two samples");
  if (static_cast<std::size_t>(w.size()) != points.size())
    throw ArgumentError("measure_assembly: values and samples differ in size");
  AssemblyInputs in;
  const std::size_t n = points.size();
  std::vector<double> d(n);
  std::map<std::tuple<double, double, double>, double> boundary;
  for (std::size_t q = 0; q < n; ++q) {
    const Point x0 = nearest_boundary_point(domain, points[q].x);
    d[q] = (points[q].x - x0).norm();
    const double b = w0(x0, points[q].t);
    boundary[{points[q].t, x0(0), x0(1)}] = b;
    if (d[q] > 0.0)
      in.A_boundary = std::max(in.A_boundary, std::abs(w(q) - b) / power_alpha(d[q], alpha));
  }

  // (2c)-type quotients: pairs inside the half-distance ball of the farther point.
  PairMax inner;
  auto visit = [&](std::size_t a, std::size_t b) {
    const std::size_t far = d[a] >= d[b] ? a : b;
    if ((points[a].x - points[b].x).norm() > 0.5 * d[far]) return;
    const double s = parabolic_distance(points[a], points[b]);
    if (s <= 0.0) return;
    inner.offer(std::abs(w(a) - w(b)) / power_alpha(s, alpha), static_cast<int>(a),
                static_cast<int>(b));
  };
  if (n <= sampling.all_pairs_limit) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) visit(a, b);
  } else {
    std::mt19937_64 rng(sampling.seed);
    for (std::size_t r = 0; r < sampling.random_pairs; ++r) {
      const std::size_t a = rng() % n, b = rng() % n;
      if (a != b) visit(a, b);
    }
  }
  in.A_interior = inner.value;

  std::vector<SpaceTimeSample> bp;
  Eigen::VectorXd bv(static_cast<Eigen::Index>(boundary.size()));
  for (const auto& [key, val] : boundary) {
    bv(static_cast<Eigen::Index>(bp.size())) = val;
    bp.push_back({Point(std::get<1>(key), std::get<2>(key)), std::get<0>(key)});
  }
  if (bp.size() >= 2)
    in.trace_seminorm = holder_seminorm(bp, bv, alpha, SeminormKind::parabolic, sampling).value;

  std::vector<SpaceTimeSample> all = points;
  all.insert(all.end(), bp.begin(), bp.end());
  Eigen::VectorXd av(static_cast<Eigen::Index>(all.size()));
  av << w, bv;
  in.global = holder_seminorm(all, av, alpha, SeminormKind::parabolic, sampling).value;
  return in;
}

AssemblyVerdict assembly_check(const AssemblyInputs& inputs) {
  AssemblyVerdict v;
  v.inputs = inputs;
  const bool finite = std::isfinite(inputs.A_boundary) && std::isfinite(inputs.A_interior) &&
                      std::isfinite(inputs.trace_seminorm) && std::isfinite(inputs.global);
  if (!finite) return v;
  const double A = std::max(inputs.A_boundary, inputs.A_interior);
  v.bound = 4.0 * A + 5.0 * inputs.trace_seminorm;
  v.slack = v.bound - inputs.global;
  v.verdict = inputs.global <= v.bound * (1.0 + 1e-12) + 1e-15 ? Verdict::pass : Verdict::fail;
  return v;
}

void write_holder_csv(std::ostream& out, const HolderReport& report) {
  out << "component,sup,seminorm,total,x1,x2,t,y1,y2,s\n";
  for (const auto& c : report.components) {
    const auto& e = c.seminorm;
    out << fmt::format("\"{}\",{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       c.component.label(), c.sup, e.value, c.total(), e.X.x(0), e.X.x(1), e.X.t,
                       e.Y.x(0), e.Y.x(1), e.Y.t);
  }
}

void write_convergence_csv(std::ostream& out, const ConvergenceTrace& trace) {
  out << "T,value,verdict\n";
  const std::string verdict = trace.converging ? "converging" : "not_converging";
  for (const auto& w : trace.windows) out << fmt::format("{:.17g},{:.17g},{}\n", w.T, w.value, verdict);
}

}  // namespace degen
