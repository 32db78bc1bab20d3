#pragma once

#include <string>
#include <vector>

#include "degen/fields.hpp"
#include "degen/geometry.hpp"
#include "degen/holder_norms.hpp"
#include "degen/solver.hpp"
#include "degen/verdict.hpp"

namespace degen {

struct MaxPrincipleReport {
  Verdict verdict = Verdict::not_applicable;
  double max_value = 0.0;  // max over all nodes and levels
  double min_f = 0.0;      // smallest sampled f
  double max_data = 0.0;   // largest initial or lateral value
  std::string reason;
};

/// Sign-preservation check: f >= 0, phi <= 0 and lateral data <= 0 must give
/// u <= tol. Hypotheses are sampled at the run's nodes and levels; cases
/// with cross-diffusion are not applicable.
MaxPrincipleReport check_max_principle(const SpaceTimeField& run, const IbvpProblem& problem,
                                       double tol = 1e-9);

struct LinftyReport {
  Verdict verdict = Verdict::not_applicable;
  double C = 0.0;        // realised constant: max(1, K_F)
  double K_F = 0.0;      // sup of r^2 (e^{2 mu} - e^{mu x'/r})
  double mu = 0.0;
  double r = 0.0;        // slab width
  double offset = 0.0;   // x' = x1 - min x1 + offset
  double Phi = 0.0;      // sup over the parabolic boundary of |u|
  double F = 0.0;        // sup |f|
  double c0 = 0.0;
  double sup_u = 0.0;
  double sup_bound = 0.0;
  double worst_ratio = 0.0;  // max |u| / comparison function
  std::string reason;
};

/// Builds the exponential comparison function over a slab containing the
/// domain, searching slab width, offset and mu for the smallest constant,
/// and checks that it dominates |u| at every node and level.
LinftyReport check_linfty_bound(const SpaceTimeField& run, const IbvpProblem& problem, double c0,
                                double tol = 1e-9);

enum class BarrierMode { parabolic, laplace, time_independent };

std::string to_string(BarrierMode mode);
BarrierMode parse_barrier_mode(const std::string& name);

struct BarrierOptions {
  int lattice = 512;        // points per axis (1-D); 2-D uses lattice_2d
  int lattice_2d = 96;
  int time_nodes = 64;      // parabolic mode, over [0, horizon]
  double horizon = 1.0;
  int max_power = 20;       // A and K range over 2^0 .. 2^max_power (K also 0)
  int radius_levels = 10;   // r = diam 2^-j, j = 0 .. radius_levels
  double onset_tol = 0.5;   // 4E: fraction of C0 kept on [T, 2T + 1]
};

struct BarrierCertificate {
  BarrierMode mode = BarrierMode::parabolic;
  bool found = false;
  double mu = 0.0;
  Point x0 = Point::Zero();
  double A = 0.0;
  double K = 0.0;
  double C0 = 0.0;
  double r = 0.0;
  double onset = 0.0;       // 4E only
  double worst_ratio = 0.0; // smallest -value/|x - x0|^mu (the realised C0)
  Point worst = Point::Zero();
  double worst_t = 0.0;
  std::vector<SpaceTimeSample> lattice;
  std::string diagnostic;
};

/// Lattice search for the barrier |x - x0|^mu + K rho^mu (times e^{At} in the
/// parabolic mode). Throws ArgumentError for mu <= 0 or laplace with mu
/// outside (0, 1); ConfigError when 4E is requested without limits.
BarrierCertificate find_barrier(const CoefficientSet& coeffs, const DefiningFunction& rho,
                                const Domain& domain, double mu, const Point& x0, BarrierMode mode,
                                const BarrierOptions& opts = {});

/// Re-evaluates the certificate on its own lattice with the same arithmetic:
/// the smallest -value / |x - x0|^mu - C0, which is >= 0 for a valid one.
/// In the parabolic mode value omits the factor e^{At} >= 1.
double recheck_barrier(const BarrierCertificate& cert, const CoefficientSet& coeffs,
                       const DefiningFunction& rho);

struct DecayReport {
  double alpha = 0.5;
  std::vector<double> times;
  std::vector<double> sup_quotient;  // per stored level
  std::vector<double> window_T;
  std::vector<double> window_C;      // sup of the quotient over [T, T + 1]
  bool bounded = false;
  bool decaying = false;
  double fitted_rate = 0.0;          // exponential rate of window_C
};

/// sup over nodes of |u(x,t) - h(x0,t)| / |x - x0|^alpha for each x0, with h
/// read off the run at x0 (the imposed lateral value).
DecayReport decay_certificate(const SpaceTimeField& run, const std::vector<Point>& x0s,
                              double alpha, double window = 1.0);

struct RateFit {
  std::string model = "none";  // exponential, polynomial, zero, none
  double rate = 0.0;
  double log_constant = 0.0;
  double r2 = 0.0;
  bool accepted = false;
};

/// Exponential fit of log value against T over the last `tail_fraction` of
/// the points; if R^2 < r2_min, a fit against log(1 + T) is tried.
RateFit fit_rate(const std::vector<double>& T, const std::vector<double>& values,
                 double tail_fraction = 0.6, double r2_min = 0.98);

struct LongTimeReport {
  std::vector<double> T;
  std::vector<double> linf;  // sup over each window of |u - v|
  RateFit rate;
  std::vector<ConvergenceTrace> traces;
};

/// Window sup norms and rate of u - v (v = 0 when null) plus the requested
/// norm classes per window.
LongTimeReport long_time_report(const LongTimeRun& run, const SpaceTimeField* v,
                                const DefiningFunction& rho,
                                const std::vector<ConvergenceOptions>& classes, int node_stride = 1,
                                int level_stride = 1);

}  // namespace degen
