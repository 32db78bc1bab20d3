#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "degen/boundary_trace.hpp"
#include "degen/expr.hpp"
#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/solver.hpp"
#include "degen/verdict.hpp"

namespace degen {

/// max(|x - y|, |t - s|^{1/2}).
double parabolic_distance(const SpaceTimeSample& X, const SpaceTimeSample& Y);

/// Which pairs enter a difference quotient.
enum class SeminormKind {
  none,       // sup term only
  parabolic,  // all pairs, distance s(X, Y)
  space,      // pairs at equal t, distance |x - y|
  time,       // pairs at equal x, distance |t - s|^{1/2}
};

enum class PairStrategy { all_pairs, random_pairs };

/// Pair selection. Pair sets of at most `all_pairs_limit` samples are always
/// enumerated exhaustively; larger ones use `random_pairs` draws from a
/// mt19937_64 seeded with `seed`.
struct PairSampling {
  PairStrategy strategy = PairStrategy::all_pairs;
  std::uint64_t seed = 20240601;
  std::size_t random_pairs = 200000;
  std::size_t all_pairs_limit = 2000;
};

/// Largest difference quotient found, with the pair that realises it.
/// Always a lower bound of the true seminorm.
struct SeminormEstimate {
  double value = 0.0;
  int first = -1;
  int second = -1;
  SpaceTimeSample X;
  SpaceTimeSample Y;
  std::size_t pairs = 0;
  std::string strategy;
};

/// Throws ArgumentError for fewer than two samples, size mismatch, or alpha
/// outside (0, 1].
SeminormEstimate holder_seminorm(const std::vector<SpaceTimeSample>& points,
                                 const Eigen::VectorXd& values, double alpha, SeminormKind kind,
                                 const PairSampling& sampling = {});

enum class NormClass {
  holder,          // C^{k,alpha} on the space-time cylinder
  weighted,        // C^{k,2+alpha}: rho and rho^2 on the top two spatial orders
  holder_star,     // C^{k,alpha}_*: time derivatives Holder in x only
  weighted_star,   // C^{k,2+alpha}_*
  slice_holder,    // C^{k,alpha} of a single time slice
  slice_weighted,  // C^{k,2+alpha} of a single time slice
};

std::string to_string(NormClass cls);
NormClass parse_norm_class(const std::string& name);

/// rho^weight D^beta d_t^time_order u, measured by sup plus a seminorm.
struct NormComponent {
  std::array<int, 2> beta{0, 0};
  int time_order = 0;
  int weight = 0;
  SeminormKind seminorm = SeminormKind::none;

  std::string label() const;
};

/// The addends of a norm class, in a fixed order. In 1-D beta(1) stays 0.
std::vector<NormComponent> norm_components(NormClass cls, int k, int dim);

/// Source of derivative values on a fixed sample set.
class DerivativeSampler {
 public:
  virtual ~DerivativeSampler() = default;
  virtual const std::vector<SpaceTimeSample>& points() const = 0;
  /// D^beta d_t^order u at every sample. Throws ConfigError when the data
  /// cannot supply it.
  virtual Eigen::VectorXd derivative(std::array<int, 2> beta, int time_order) const = 0;
  /// rho at every sample.
  virtual Eigen::VectorXd rho() const = 0;
};

/// Exact derivatives of a closed-form u.
class ExprSampler final : public DerivativeSampler {
 public:
  ExprSampler(Expr u, const DefiningFunction& rho, std::vector<SpaceTimeSample> points);

  const std::vector<SpaceTimeSample>& points() const override { return points_; }
  Eigen::VectorXd derivative(std::array<int, 2> beta, int time_order) const override;
  Eigen::VectorXd rho() const override { return rho_values_; }

 private:
  SmoothField u_;
  std::vector<SpaceTimeSample> points_;
  Eigen::VectorXd rho_values_;
};

/// Finite-difference derivatives of a grid field; weights are applied after
/// differencing. Samples are every `node_stride`-th node per axis at every
/// `level_stride`-th stored level.
class GridSampler final : public DerivativeSampler {
 public:
  GridSampler(SpaceTimeField field, const DefiningFunction& rho, int node_stride = 1,
              int level_stride = 1);

  const std::vector<SpaceTimeSample>& points() const override { return points_; }
  Eigen::VectorXd derivative(std::array<int, 2> beta, int time_order) const override;
  Eigen::VectorXd rho() const override { return rho_values_; }

 private:
  SpaceTimeField field_;
  std::vector<int> nodes_;
  std::vector<int> levels_;
  std::vector<SpaceTimeSample> points_;
  Eigen::VectorXd rho_values_;
};

/// Finite-difference derivative of a grid field, node for node and level
/// for level. Throws ConfigError when an axis has too few nodes or levels.
SpaceTimeField differentiate(const SpaceTimeField& field, std::array<int, 2> beta,
                             int time_order);

/// Multilinear interpolation of one stored level at x.
double interpolate(const SpaceTimeField& field, const Point& x, int level);

struct ComponentReport {
  NormComponent component;
  double sup = 0.0;
  SpaceTimeSample sup_at;
  SeminormEstimate seminorm;

  double total() const { return sup + seminorm.value; }
};

struct HolderReport {
  NormClass cls = NormClass::holder;
  int k = 0;
  double alpha = 0.5;
  std::vector<ComponentReport> components;
  double total = 0.0;
  std::string strategy;
  bool lower_bound = true;  // every seminorm is a sampled maximum
};

/// Sum of the component estimates of the class on the sampler's points.
HolderReport weighted_norm(const DerivativeSampler& sampler, NormClass cls, int k, double alpha,
                           const PairSampling& sampling = {});

/// Boundary-vanishing check for rho^j D^{k+j} u along the inward normal.
struct MembershipReport {
  int weight = 0;
  double param = 0.0;         // boundary point parameter
  double smallest = 0.0;      // profile value at the smallest depth
  double rate = 0.0;          // fitted exponent of the profile in the depth
  bool vanishes = false;      // rate > 0.05 or the profile is identically tiny
  std::vector<double> depths;
  std::vector<double> profile;
};

std::vector<MembershipReport> check_membership(const Expr& u, const DefiningFunction& rho,
                                               const Domain& domain, int k,
                                               const std::vector<double>& times,
                                               int boundary_samples = 3);

struct FitOptions {
  int j_min = 3;
  int j_max = 10;
  int drop = 2;  // coarsest depths excluded from the regression
};

struct ExponentFit {
  double alpha = std::numeric_limits<double>::quiet_NaN();
  double log_constant = 0.0;
  double r2 = 0.0;
  double residual = 0.0;  // rms of the log residuals
  bool defined = false;   // false when every sup vanishes
  std::vector<double> depths;
  std::vector<double> sups;
};

/// Least-squares slope of log sups against log depths, skipping the first
/// `drop` entries and zero sups.
ExponentFit fit_power_law(const std::vector<double>& depths, const std::vector<double>& sups,
                          int drop);

/// m_j = sup_t |u(x0 + 2^-j nu, t) - h(t)| and the fitted exponent.
ExponentFit fit_boundary_exponent(const std::function<double(const Point&, double)>& u,
                                  const std::function<double(double)>& h,
                                  const BoundaryPoint& x0, const std::vector<double>& times,
                                  const FitOptions& opts = {});

/// Grid version: u interpolated along the normal at every stored level;
/// `h` holds the trace at x0 per level.
ExponentFit fit_boundary_exponent(const SpaceTimeField& u, const std::vector<double>& h,
                                  const BoundaryPoint& x0, const FitOptions& opts = {});

struct WindowValue {
  double T = 0.0;
  double value = 0.0;
  HolderReport report;
};

struct ConvergenceTrace {
  NormClass cls = NormClass::holder;
  int k = 0;
  double alpha = 0.5;
  double epsilon = 0.0;
  std::vector<WindowValue> windows;
  bool decreasing = false;  // over the tail
  bool converging = false;  // decreasing and the last value below epsilon
};

struct ConvergenceOptions {
  NormClass cls = NormClass::holder;
  int k = 0;
  double alpha = 0.5;
  double epsilon = 1e-3;
  int tail = 0;  // windows judged for the verdict; 0 means all
  PairSampling sampling;
};

/// Norm of u - g over each window [T, T + length], with samplers built by
/// `make_sampler(T0, T1)`.
ConvergenceTrace windowed_convergence(
    const std::function<std::unique_ptr<DerivativeSampler>(double, double)>& make_sampler,
    const std::vector<double>& starts, double length, const ConvergenceOptions& opts);

/// Closed-form u - g sampled on `space` x `times_per_window` uniform times.
ConvergenceTrace windowed_convergence(const Expr& u, const Expr& g, const DefiningFunction& rho,
                                      const std::vector<Point>& space, int times_per_window,
                                      const std::vector<double>& starts, double length,
                                      const ConvergenceOptions& opts);

/// Grid field u minus a stationary grid field g (single level on the same
/// nodes; pass nullptr for g = 0).
ConvergenceTrace windowed_convergence(const SpaceTimeField& u, const SpaceTimeField* g,
                                      const DefiningFunction& rho,
                                      const std::vector<double>& starts, double length,
                                      const ConvergenceOptions& opts, int node_stride = 1,
                                      int level_stride = 1);

/// Per-slice norm of a closed-form u at time t.
HolderReport slice_norm(const Expr& u, const DefiningFunction& rho, const std::vector<Point>& space,
                        double t, NormClass cls, int k, double alpha,
                        const PairSampling& sampling = {});

/// Interior sample points of the closure, graded toward the degenerate
/// boundary (gamma = 1 gives a uniform lattice).
std::vector<Point> norm_lattice(const Domain& domain, int N, double gamma = 2.0);

std::vector<SpaceTimeSample> space_time_lattice(const std::vector<Point>& space,
                                                const std::vector<double>& times);

/// Quantities entering the assembly inequality [w] <= 4A + 5[w0].
struct AssemblyInputs {
  double A_boundary = 0.0;      // sup |w(x,t) - w0(x0,t)| / d(x)^alpha
  double A_interior = 0.0;      // quotients over pairs with |x - y| <= d(x)/2
  double trace_seminorm = 0.0;  // [w0] over the projected boundary samples
  double global = 0.0;          // [w] over interior and boundary samples
};

struct AssemblyVerdict {
  Verdict verdict = Verdict::not_applicable;
  double bound = 0.0;  // 4A + 5[w0]
  double slack = 0.0;  // bound - global
  AssemblyInputs inputs;
};

AssemblyInputs measure_assembly(const std::vector<SpaceTimeSample>& points,
                                const Eigen::VectorXd& w,
                                const std::function<double(const Point&, double)>& w0,
                                const Domain& domain, double alpha,
                                const PairSampling& sampling = {});

AssemblyVerdict assembly_check(const AssemblyInputs& inputs);

/// Nearest point of the degenerate boundary.
Point nearest_boundary_point(const Domain& domain, const Point& x);

/// CSV: component,sup,seminorm,total,x1,x2,t,y1,y2,s.
void write_holder_csv(std::ostream& out, const HolderReport& report);
/// CSV: T,value,verdict.
void write_convergence_csv(std::ostream& out, const ConvergenceTrace& trace);

}  // namespace degen
