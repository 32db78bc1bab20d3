#include "degen/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

using SparseRow = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<double>;

enum class NodeKind { interior, dirichlet, copy, exact };

/// Spatial discretisation of rho^2 a_ij d_ij + delta Lap + rho b_i d_i + c - shift
/// on a tensor grid, plus the bookkeeping of boundary node kinds.
class Discretization {
 public:
  Discretization(const Domain& domain, const DefiningFunction& rho, const CoefficientSet& coeffs,
                 const GridSpec& grid, double delta, bool unit_weight, bool have_exact)
      : domain_(domain), rho_(rho), coeffs_(coeffs), delta_(delta), unit_weight_(unit_weight) {
    switch (domain.kind()) {
      case DomainKind::interval:
        x1_ = graded_nodes(domain.a(), domain.b(), grid.N, grid.gamma);
        break;
      case DomainKind::half_strip: {
        const double r = domain.halfwidth();
        x1_.resize(grid.N + 1);
        for (int i = 0; i <= grid.N; ++i) x1_[i] = -r + 2.0 * r * i / grid.N;
        x2_ = graded_nodes_one_sided(r, grid.N, grid.gamma);
        break;
      }
      case DomainKind::disk:
        throw ConfigError("the finite-difference solver supports interval and half_strip domains");
    }
    dim_ = domain.dim();
    const int n = node_count();
    kind_.assign(n, NodeKind::interior);
    copy_from_.assign(n, -1);
    if (dim_ == 1) {
      kind_[0] = kind_[n - 1] = NodeKind::dirichlet;
      degenerate_ = {0, n - 1};
    } else {
      const int n1 = n1_(), n2 = n2_();
      for (int i = 0; i < n1; ++i) {
        kind_[idx(i, 0)] = NodeKind::dirichlet;
        degenerate_.push_back(idx(i, 0));
      }
      for (int j = 1; j < n2; ++j) {
        for (int i : {0, n1 - 1}) mark_artificial(i, j, have_exact);
      }
      for (int i = 1; i < n1 - 1; ++i) mark_artificial(i, n2 - 1, have_exact);
    }
  }

  int dim() const { return dim_; }
  int node_count() const { return n1_() * n2_(); }
  const std::vector<double>& x1() const { return x1_; }
  const std::vector<double>& x2() const { return x2_; }
  NodeKind kind(int k) const { return kind_[k]; }
  int copy_from(int k) const { return copy_from_[k]; }
  const std::vector<int>& degenerate_nodes() const { return degenerate_; }

  Point point(int k) const {
    const int i = k % n1_();
    const int j = k / n1_();
    return Point(x1_[i], dim_ == 1 ? 0.0 : x2_[j]);
  }

  double weight(const Point& x) const { return unit_weight_ ? 1.0 : rho_(x); }

  /// Interior rows of the spatial operator at time t (other rows empty).
  SparseRow assemble(double t, double shift) const {
    std::vector<Triplet> trip;
    trip.reserve(static_cast<std::size_t>(node_count()) * (dim_ == 1 ? 3 : 9));
    const int n1 = n1_();
    for (int k = 0; k < node_count(); ++k) {
      if (kind_[k] != NodeKind::interior) continue;
      const int i = k % n1;
      const int j = k / n1;
      const Point x = point(k);
      const double w = weight(x);
      const Eigen::Matrix2d a = coeffs_.a_at(x, t);
      const Eigen::Vector2d b = coeffs_.b_at(x, t);
      double diag = coeffs_.c_at(x, t) - shift;
      // d_11 and first-order x1 term
      add_axis(trip, k, idx(i - 1, j), idx(i + 1, j), x1_[i] - x1_[i - 1], x1_[i + 1] - x1_[i],
               w * w * a(0, 0) + delta_, w * b(0), diag);
      if (dim_ == 2) {
        add_axis(trip, k, idx(i, j - 1), idx(i, j + 1), x2_[j] - x2_[j - 1], x2_[j + 1] - x2_[j],
                 w * w * a(1, 1) + delta_, w * b(1), diag);
        const double cross = 2.0 * w * w * a(0, 1);
        if (cross != 0.0) {
          const double s = cross / ((x1_[i + 1] - x1_[i - 1]) * (x2_[j + 1] - x2_[j - 1]));
          trip.emplace_back(k, idx(i + 1, j + 1), s);
          trip.emplace_back(k, idx(i - 1, j - 1), s);
          trip.emplace_back(k, idx(i + 1, j - 1), -s);
          trip.emplace_back(k, idx(i - 1, j + 1), -s);
        }
      }
      trip.emplace_back(k, k, diag);
    }
    SparseRow A(node_count(), node_count());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
  }

  /// Identity rows (boundary nodes only, or all nodes), with u_k - u_nb for copied nodes.
  void add_identity_rows(std::vector<Triplet>& trip, bool include_interior) const {
    for (int k = 0; k < node_count(); ++k) {
      if (kind_[k] == NodeKind::interior && !include_interior) continue;
      trip.emplace_back(k, k, 1.0);
      if (kind_[k] == NodeKind::copy) trip.emplace_back(k, copy_from_[k], -1.0);
    }
  }

 private:
  int n1_() const { return static_cast<int>(x1_.size()); }
  int n2_() const { return dim_ == 1 ? 1 : static_cast<int>(x2_.size()); }
  int idx(int i, int j) const { return j * n1_() + i; }

  void mark_artificial(int i, int j, bool have_exact) {
    const int k = idx(i, j);
    if (have_exact) {
      kind_[k] = NodeKind::exact;
      return;
    }
    kind_[k] = NodeKind::copy;
    const int n1 = n1_(), n2 = n2_();
    const int ii = std::clamp(i, 1, n1 - 2);
    const int jj = j == n2 - 1 ? n2 - 2 : j;
    copy_from_[k] = idx(ii, jj);
  }

  /// Non-uniform central second difference with diffusion D and upwinded drift beta.
  static void add_axis(std::vector<Triplet>& trip, int k, int lo, int hi, double hl, double hr,
                       double D, double beta, double& diag) {
    double lower = 2.0 * D / (hl * (hl + hr));
    double upper = 2.0 * D / (hr * (hl + hr));
    diag -= lower + upper;
    if (beta > 0.0) {
      upper += beta / hr;
      diag -= beta / hr;
    } else if (beta < 0.0) {
      lower -= beta / hl;
      diag += beta / hl;
    }
    trip.emplace_back(k, lo, lower);
    trip.emplace_back(k, hi, upper);
  }

  const Domain& domain_;
  const DefiningFunction& rho_;
  const CoefficientSet& coeffs_;
  double delta_;
  bool unit_weight_;
  int dim_ = 1;
  std::vector<double> x1_, x2_;
  std::vector<NodeKind> kind_;
  std::vector<int> copy_from_;
  std::vector<int> degenerate_;
};

/// Thomas algorithm on a row-major tridiagonal sparse matrix.
Eigen::VectorXd solve_tridiagonal(const SparseRow& S, const Eigen::VectorXd& rhs) {
  const int n = static_cast<int>(rhs.size());
  Eigen::VectorXd lo = Eigen::VectorXd::Zero(n), di = Eigen::VectorXd::Zero(n),
                  up = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    for (SparseRow::InnerIterator it(S, k); it; ++it) {
      if (it.col() == k - 1) lo(k) = it.value();
      else if (it.col() == k) di(k) = it.value();
      else if (it.col() == k + 1) up(k) = it.value();
      else if (it.value() != 0.0) throw NumericError("tridiagonal solve: matrix is not tridiagonal");
    }
  }
  Eigen::VectorXd cp(n), dp(n), x(n);
  double m = di(0);
  if (m == 0.0) throw NumericError("tridiagonal solve: zero pivot");
  cp(0) = up(0) / m;
  dp(0) = rhs(0) / m;
  for (int k = 1; k < n; ++k) {
    m = di(k) - lo(k) * cp(k - 1);
    if (m == 0.0) throw NumericError("tridiagonal solve: zero pivot");
    cp(k) = up(k) / m;
    dp(k) = (rhs(k) - lo(k) * dp(k - 1)) / m;
  }
  x(n - 1) = dp(n - 1);
  for (int k = n - 2; k >= 0; --k) x(k) = dp(k) - cp(k) * x(k + 1);
  return x;
}

class LinearSolver {
 public:
  explicit LinearSolver(bool tridiagonal) : tridiagonal_(tridiagonal) {}

  void factor(const SparseRow& S) {
    S_ = S;
    if (tridiagonal_) return;
    Eigen::SparseMatrix<double> C = S;
    C.makeCompressed();
    lu_.compute(C);
    if (lu_.info() != Eigen::Success) throw NumericError("sparse LU factorisation failed");
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) {
    if (tridiagonal_) return solve_tridiagonal(S_, rhs);
    Eigen::VectorXd x = lu_.solve(rhs);
    if (lu_.info() != Eigen::Success) throw NumericError("sparse LU solve failed");
    return x;
  }

 private:
  bool tridiagonal_;
  SparseRow S_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

double sup_c(const Discretization& d, const CoefficientSet& coeffs, double horizon) {
  double s = -std::numeric_limits<double>::infinity();
  const int samples = coeffs.c.depends_on(Var::t) ? 33 : 1;
  for (int q = 0; q < samples; ++q) {
    const double t = samples == 1 ? 0.0 : horizon * q / (samples - 1);
    for (int k = 0; k < d.node_count(); ++k) s = std::max(s, coeffs.c_at(d.point(k), t));
  }
  return s;
}

std::vector<BoundaryPoint> degenerate_points(const IbvpProblem& p, const Discretization& d) {
  std::vector<BoundaryPoint> pts;
  for (int k : d.degenerate_nodes()) {
    const Point x = d.point(k);
    pts.push_back(boundary_point_at(p.domain, p.rho, x(0)));
  }
  return pts;
}

void compatibility_gate(const IbvpProblem& p, const std::vector<BoundaryPoint>& pts,
                        double horizon, const SolveOptions& opts) {
  if (!(opts.compat_threshold > 0.0)) return;
  const int count = std::clamp(static_cast<int>(std::ceil(horizon / 1e-2)) + 1, 5, 2001);
  const auto times = uniform_times(horizon, count);
  std::vector<BoundaryPoint> sample;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / 4);
  for (std::size_t q = 0; q < pts.size(); q += stride) sample.push_back(pts[q]);
  if (sample.back().x != pts.back().x) sample.push_back(pts.back());
  const BoundaryTrace tr = trace_h(p.coeffs, p.phi, sample, times, opts.trace_tol);
  const double res = compatibility_residual(tr);
  if (res > opts.compat_threshold)
    throw GateError(fmt::format("lateral data violates the compatibility identity (residual {:g})", res));
}

}  // namespace

void GridSpec::validate() const {
  if (N < 8) throw ConfigError(fmt::format("grid: N must be >= 8 (got {})", N));
  if (M < 2) throw ConfigError(fmt::format("grid: M must be >= 2 (got {})", M));
  if (!(gamma >= 1.0)) throw ConfigError(fmt::format("grid: gamma must be >= 1 (got {})", gamma));
  if (!(theta >= 0.5 && theta <= 1.0))
    throw ConfigError(fmt::format("grid: theta must lie in [0.5, 1] (got {})", theta));
}

void DeltaSchedule::validate() const {
  if (!(delta0 > 0.0)) throw ConfigError("schedule: delta0 must be > 0");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("schedule: ratio must lie in (0, 1)");
  if (max_stages < 2) throw ConfigError("schedule: need at least two stages");
  if (!(tolerance > 0.0)) throw ConfigError("schedule: tolerance must be > 0");
}

double DeltaSchedule::delta(int j) const { return delta0 * std::pow(ratio, j); }

Point SpaceTimeField::point(int node) const {
  const int i = node % n1();
  const int j = node / n1();
  return Point(x1[i], dim == 1 ? 0.0 : x2[j]);
}

SpaceTimeField SpaceTimeField::window(double T0, double T1) const {
  SpaceTimeField out = *this;
  out.times.clear();
  out.levels.clear();
  const double slack = 1e-9 * (1.0 + std::abs(T1));
  for (int l = 0; l < level_count(); ++l) {
    if (times[l] >= T0 - slack && times[l] <= T1 + slack) {
      out.times.push_back(times[l]);
      out.levels.push_back(levels[l]);
    }
  }
  return out;
}

double SpaceTimeField::sup_abs() const {
  double s = 0.0;
  for (const auto& v : levels) s = std::max(s, v.cwiseAbs().maxCoeff());
  return s;
}

std::vector<double> graded_nodes(double a, double b, int N, double gamma) {
  std::vector<double> x(N + 1);
  for (int i = 0; i <= N; ++i) {
    const double xi = static_cast<double>(i) / N;
    x[i] = xi <= 0.5 ? a + (b - a) * 0.5 * std::pow(2.0 * xi, gamma)
                     : b - (b - a) * 0.5 * std::pow(2.0 * (1.0 - xi), gamma);
  }
  x.front() = a;
  x.back() = b;
  return x;
}

std::vector<double> graded_nodes_one_sided(double r, int N, double gamma) {
  std::vector<double> x(N + 1);
  for (int i = 0; i <= N; ++i) x[i] = r * std::pow(static_cast<double>(i) / N, gamma);
  x.back() = r;
  return x;
}

SpaceTimeField solve_ibvp(const IbvpProblem& p, const GridSpec& grid, double delta, double horizon,
                          const SolveOptions& opts) {
  grid.validate();
  if (!(delta >= 0.0)) throw ConfigError("solve: delta must be >= 0");
  if (!(horizon > 0.0)) throw ConfigError("solve: horizon must be > 0");
  if (opts.store_stride < 1) throw ConfigError("solve: store_stride must be >= 1");
  const Discretization disc(p.domain, p.rho, p.coeffs, grid, delta, opts.unit_weight,
                            p.exact.has_value());
  const int n = disc.node_count();
  const int M = grid.M;
  const double dt = horizon / M;
  const double theta = grid.theta;
  const auto times = uniform_times(horizon, M + 1);

  // Lateral data on the degenerate faces at every level.
  const auto pts = degenerate_points(p, disc);
  if (M + 1 >= 5) compatibility_gate(p, pts, horizon, opts);
  const Eigen::MatrixXd h = trace_h(p.coeffs, p.phi, pts, times, opts.trace_tol).values;

  const double csup = sup_c(disc, p.coeffs, horizon);
  const double shift = csup > 0.0 ? csup + 1.0 : 0.0;

  const bool time_dep = !p.coeffs.time_independent();
  const bool coeff_time_dep = p.coeffs.c.depends_on(Var::t) ||
                              std::any_of(p.coeffs.a.begin(), p.coeffs.a.end(),
                                          [](const Expr& e) { return e.depends_on(Var::t); }) ||
                              std::any_of(p.coeffs.b.begin(), p.coeffs.b.end(),
                                          [](const Expr& e) { return e.depends_on(Var::t); });

  auto forcing = [&](double t) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
    const double scale = std::exp(-shift * t);
    for (int k = 0; k < n; ++k)
      if (disc.kind(k) == NodeKind::interior) f(k) = scale * p.coeffs.f_at(disc.point(k), t);
    return f;
  };
  auto boundary_rhs = [&](int level, Eigen::VectorXd& rhs) {
    const double t = times[level];
    const double scale = std::exp(-shift * t);
    const auto& deg = disc.degenerate_nodes();
    for (std::size_t q = 0; q < deg.size(); ++q) rhs(deg[q]) = scale * h(q, level);
    for (int k = 0; k < n; ++k) {
      if (disc.kind(k) == NodeKind::exact) rhs(k) = scale * (*p.exact)(disc.point(k), t);
      else if (disc.kind(k) == NodeKind::copy) rhs(k) = 0.0;
    }
  };

  SpaceTimeField out;
  out.dim = disc.dim();
  out.x1 = disc.x1();
  out.x2 = disc.x2();
  out.delta = delta;
  out.theta = theta;
  out.scheme = fmt::format("theta={:g},upwind,{}", theta, disc.dim() == 1 ? "thomas" : "sparse_lu");

  Eigen::VectorXd v(n);
  for (int k = 0; k < n; ++k) v(k) = p.phi(disc.point(k), 0.0);
  boundary_rhs(0, v);
  for (int k = 0; k < n; ++k)
    if (disc.kind(k) == NodeKind::copy) v(k) = v(disc.copy_from(k));
  out.times.push_back(0.0);
  out.levels.push_back(v);

  // Growth bound e^{c0 t}(Phi + F t) with slack for the shifted scheme.
  double Phi = v.cwiseAbs().maxCoeff();
  if (h.size() > 0) Phi = std::max(Phi, h.cwiseAbs().maxCoeff());
  double F = 0.0;
  const double c0 = std::max(0.0, csup);
  const double safety = (theta == 1.0 && disc.dim() == 1) ? 1.0 + 1e-6 : 2.0;

  LinearSolver solver(disc.dim() == 1);
  SparseRow A_old = disc.assemble(0.0, shift);
  SparseRow A_new = A_old;
  Eigen::VectorXd f_old = forcing(0.0);
  F = std::max(F, f_old.cwiseAbs().maxCoeff());
  bool factored = false;
  std::vector<Triplet> boundary_trip;
  disc.add_identity_rows(boundary_trip, true);
  SparseRow Bnd(n, n);
  Bnd.setFromTriplets(boundary_trip.begin(), boundary_trip.end());

  for (int step = 1; step <= M; ++step) {
    const double t = times[step];
    if (coeff_time_dep) A_new = disc.assemble(t, shift);
    const Eigen::VectorXd f_new = time_dep || shift != 0.0 ? forcing(t) : f_old;
    if (!factored || coeff_time_dep) {
      SparseRow S = Bnd - theta * dt * A_new;
      S.makeCompressed();
      solver.factor(S);
      factored = true;
    }
    Eigen::VectorXd rhs = v - dt * (theta * f_new + (1.0 - theta) * f_old);
    if (theta < 1.0) rhs += (1.0 - theta) * dt * (A_old * v);
    for (int k = 0; k < n; ++k)
      if (disc.kind(k) != NodeKind::interior) rhs(k) = 0.0;
    boundary_rhs(step, rhs);
    v = solver.solve(rhs);
    if (!all_finite(v)) throw NumericError(fmt::format("non-finite solution at t={:g}", t));
    F = std::max(F, std::exp(shift * t) * f_new.cwiseAbs().maxCoeff());
    if (opts.check_growth) {
      const double bound =
          safety * std::exp((c0 + shift * shift * dt) * t) * (Phi + F * t) + 1e-12;
      const double sup = std::exp(shift * t) * v.cwiseAbs().maxCoeff();
      if (sup > bound)
        throw NumericError(fmt::format(
            "instability: sup|u|={:g} exceeds the a priori bound {:g} at t={:g}", sup, bound, t));
    }
    if (step % opts.store_stride == 0 || step == M) {
      out.times.push_back(t);
      out.levels.push_back(shift == 0.0 ? v : Eigen::VectorXd(std::exp(shift * t) * v));
    }
    A_old = A_new;
    f_old = f_new;
  }
  return out;
}

ViscosityResult vanishing_viscosity(const IbvpProblem& p, const GridSpec& grid,
                                    const DeltaSchedule& schedule, double horizon,
                                    const SolveOptions& opts) {
  schedule.validate();
  ViscosityResult res;
  SpaceTimeField prev;
  for (int j = 0; j < schedule.max_stages; ++j) {
    const double d = schedule.delta(j);
    SpaceTimeField cur = solve_ibvp(p, grid, d, horizon, opts);
    res.report.deltas.push_back(d);
    if (j > 0) {
      const double diff = max_difference(prev, cur);
      res.report.differences.push_back(diff);
      if (diff < schedule.tolerance) {
        res.report.stabilized = true;
        res.report.stage = j;
        res.field = std::move(cur);
        return res;
      }
    }
    prev = std::move(cur);
  }
  res.field = std::move(prev);
  return res;
}

SpaceTimeField solve_elliptic(const IbvpProblem& p, const GridSpec& grid, double delta,
                              const EllipticOptions& opts) {
  grid.validate();
  const CoefficientSet lim = p.coeffs.limit_problem();
  const GateResult gate = gate_check(lim, p.domain, p.rho, 0, opts.gate_alpha);
  if (!gate.pass)
    throw GateError(fmt::format(
        "elliptic limit: P({:g}) < 0 and cbar < 0 required on the boundary (sup P = {:g}, sup cbar = {:g})",
        opts.gate_alpha, gate.sup_poly, gate.sup_cbar));
  const Discretization disc(p.domain, p.rho, lim, grid, delta, opts.unit_weight,
                            opts.exact.has_value());
  const int n = disc.node_count();
  std::vector<Triplet> trip;
  disc.add_identity_rows(trip, false);
  SparseRow Bnd(n, n);
  Bnd.setFromTriplets(trip.begin(), trip.end());
  SparseRow S = Bnd + disc.assemble(0.0, 0.0);
  S.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    const Point x = disc.point(k);
    switch (disc.kind(k)) {
      case NodeKind::interior: rhs(k) = lim.f_at(x, 0.0); break;
      case NodeKind::dirichlet: rhs(k) = lim.f_at(x, 0.0) / lim.c_at(x, 0.0); break;
      case NodeKind::exact: rhs(k) = (*opts.exact)(x, 0.0); break;
      case NodeKind::copy: rhs(k) = 0.0; break;
    }
  }
  LinearSolver solver(false);
  solver.factor(S);
  const Eigen::VectorXd v = solver.solve(rhs);
  if (!all_finite(v)) throw NumericError("elliptic solve produced non-finite values");

  SpaceTimeField out;
  out.dim = disc.dim();
  out.x1 = disc.x1();
  out.x2 = disc.x2();
  out.times = {0.0};
  out.levels = {v};
  out.delta = delta;
  out.theta = 1.0;
  out.scheme = "stationary,upwind,sparse_lu";
  return out;
}

ViscosityResult solve_elliptic_limit(const IbvpProblem& p, const GridSpec& grid,
                                     const DeltaSchedule& schedule, const EllipticOptions& opts) {
  schedule.validate();
  ViscosityResult res;
  SpaceTimeField prev;
  for (int j = 0; j < schedule.max_stages; ++j) {
    const double d = schedule.delta(j);
    SpaceTimeField cur = solve_elliptic(p, grid, d, opts);
    res.report.deltas.push_back(d);
    if (j > 0) {
      const double diff = max_difference(prev, cur);
      res.report.differences.push_back(diff);
      if (diff < schedule.tolerance) {
        res.report.stabilized = true;
        res.report.stage = j;
        res.field = std::move(cur);
        return res;
      }
    }
    prev = std::move(cur);
  }
  res.field = std::move(prev);
  return res;
}

LongTimeRun long_time_run(const IbvpProblem& p, const GridSpec& grid, double delta, double window,
                          double t_max, int steps_per_window, const SolveOptions& opts) {
  if (!(window > 0.0) || !(t_max >= window))
    throw ConfigError("long_time_run: need 0 < window <= t_max");
  if (steps_per_window < 1) throw ConfigError("long_time_run: steps_per_window must be >= 1");
  if (!p.coeffs.limits) throw ConfigError("long_time_run: coefficient limits must be declared");
  const int count = static_cast<int>(std::llround(t_max / window));
  if (std::abs(count * window - t_max) > 1e-9 * t_max)
    throw ConfigError("long_time_run: t_max must be a multiple of the window length");
  GridSpec g = grid;
  g.M = count * steps_per_window;
  SolveOptions o = opts;
  o.check_growth = true;
  LongTimeRun run;
  run.field = solve_ibvp(p, g, delta, t_max, o);
  for (int k = 0; k < count; ++k)
    run.windows.push_back(run.field.window(k * window, (k + 1) * window));
  return run;
}

double max_node_error(const SpaceTimeField& field, const Expr& exact) {
  double e = 0.0;
  for (int l = 0; l < field.level_count(); ++l)
    for (int k = 0; k < field.node_count(); ++k)
      e = std::max(e, std::abs(field.at(l, k) - exact(field.point(k), field.times[l])));
  return e;
}

double max_difference(const SpaceTimeField& u, const SpaceTimeField& v) {
  if (u.node_count() != v.node_count() || u.level_count() != v.level_count())
    throw ArgumentError("max_difference: fields live on different grids");
  double e = 0.0;
  for (int l = 0; l < u.level_count(); ++l)
    e = std::max(e, (u.levels[l] - v.levels[l]).cwiseAbs().maxCoeff());
  return e;
}

}  // namespace degen
