#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "degen/boundary_trace.hpp"
#include "degen/expr.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"

namespace degen {

/// Space-time discretisation. Nodes per axis N + 1 (N intervals), graded by
/// xi -> xi^gamma toward each degenerate face; M time steps over the horizon.
struct GridSpec {
  int N = 80;
  double gamma = 2.0;
  int M = 200;
  double theta = 1.0;  // 1: backward Euler; 0.5: Crank-Nicolson (no positivity guarantee)

  void validate() const;
};

/// Initial-boundary value problem L u = f, u(., 0) = phi, u = h on the
/// degenerate boundary. `exact` (optional) supplies data on the artificial
/// faces of the half strip and serves as the error reference.
struct IbvpProblem {
  Domain domain;
  DefiningFunction rho;
  CoefficientSet coeffs;
  Expr phi;
  std::optional<Expr> exact;
};

struct SolveOptions {
  bool unit_weight = false;          // replace rho by 1 (uniformly parabolic control runs)
  int store_stride = 1;              // keep every k-th time level (the last is always kept)
  double compat_threshold = 1e-6;    // gate on the trace compatibility residual
  double trace_tol = 1e-10;
  bool check_growth = false;         // abort when sup|u| exceeds the a priori bound
};

/// Grid values u[level][node]; nodes are ordered x1 fastest.
struct SpaceTimeField {
  int dim = 1;
  std::vector<double> x1;
  std::vector<double> x2;  // empty in 1-D
  std::vector<double> times;
  std::vector<Eigen::VectorXd> levels;
  double delta = 0.0;
  double theta = 1.0;
  std::string scheme;

  int n1() const { return static_cast<int>(x1.size()); }
  int n2() const { return dim == 1 ? 1 : static_cast<int>(x2.size()); }
  int node_count() const { return n1() * n2(); }
  int level_count() const { return static_cast<int>(levels.size()); }
  int index(int i, int j = 0) const { return j * n1() + i; }
  Point point(int node) const;
  double at(int level, int node) const { return levels[level](node); }

  /// Levels with T0 <= t <= T1 (inclusive, with a small slack).
  SpaceTimeField window(double T0, double T1) const;
  double sup_abs() const;
};

/// 1-D node map on [a, b], graded toward both ends.
std::vector<double> graded_nodes(double a, double b, int N, double gamma);
/// Node map on [0, r] graded toward 0 only.
std::vector<double> graded_nodes_one_sided(double r, int N, double gamma);

/// theta-scheme for L_delta = L + delta Lap with Dirichlet h on the degenerate
/// faces (h from the trace formula). Throws GateError if the trace violates the
/// compatibility identity, ConfigError for the disk, NumericError on NaN or
/// growth beyond the a priori bound.
SpaceTimeField solve_ibvp(const IbvpProblem& problem, const GridSpec& grid, double delta,
                          double horizon, const SolveOptions& opts = {});

struct DeltaSchedule {
  double delta0 = 1e-2;
  double ratio = 0.25;
  int max_stages = 8;
  double tolerance = 1e-6;

  void validate() const;
  double delta(int j) const;
};

struct StabilizationReport {
  std::vector<double> deltas;
  std::vector<double> differences;  // differences[j] = |u_{delta_j} - u_{delta_{j+1}}|_inf
  bool stabilized = false;
  int stage = -1;  // index j + 1 of the run at which stabilization was observed
};

struct ViscosityResult {
  SpaceTimeField field;
  StabilizationReport report;
};

ViscosityResult vanishing_viscosity(const IbvpProblem& problem, const GridSpec& grid,
                                    const DeltaSchedule& schedule, double horizon,
                                    const SolveOptions& opts = {});

struct EllipticOptions {
  double gate_alpha = 0.5;
  bool unit_weight = false;
  std::optional<Expr> exact;  // data for artificial faces of the half strip
};

/// L0 v = fbar with v = fbar/cbar on the degenerate boundary, via the same
/// regularisation schedule. The field has a single level at t = 0.
ViscosityResult solve_elliptic_limit(const IbvpProblem& problem, const GridSpec& grid,
                                     const DeltaSchedule& schedule,
                                     const EllipticOptions& opts = {});

/// Single stationary solve at fixed delta.
SpaceTimeField solve_elliptic(const IbvpProblem& problem, const GridSpec& grid, double delta,
                              const EllipticOptions& opts = {});

struct LongTimeRun {
  SpaceTimeField field;
  std::vector<SpaceTimeField> windows;  // [T, T + window] for T = 0, window, ...
  double growth_bound = 0.0;
};

/// Marches to t_max with `steps_per_window` steps per window and checks the
/// a priori growth bound; the grid's M is ignored.
LongTimeRun long_time_run(const IbvpProblem& problem, const GridSpec& grid, double delta,
                          double window, double t_max, int steps_per_window,
                          const SolveOptions& opts = {});

/// max over nodes and stored levels of |u - exact|.
double max_node_error(const SpaceTimeField& field, const Expr& exact);

/// max over nodes and stored levels of |u - v|; fields must share the grid.
double max_difference(const SpaceTimeField& u, const SpaceTimeField& v);

}  // namespace degen
