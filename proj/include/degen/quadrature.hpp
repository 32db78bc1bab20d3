#pragma once

#include <functional>

namespace degen {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
  int panels = 0;
};

/// Integral of f over [a, b] to absolute accuracy `tol`, by bisection of a
/// 15-point Gauss-Kronrod panel rule. Throws NumericError (with the accuracy
/// reached) when `max_depth` bisections do not suffice.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                     int max_depth = 40);

}  // namespace degen
