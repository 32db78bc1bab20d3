#include "degen/quadrature.hpp"

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "degen/errors.hpp"

namespace degen {

namespace {

using Rule = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Panel {
  double value;
  double error;
};

Panel panel(const std::function<double(double)>& f, double a, double b) {
  Panel p{};
  p.value = Rule::integrate(f, a, b, 0, 0.0, &p.error);
  return p;
}

void refine(const std::function<double(double)>& f, double a, double b, double tol, Panel whole,
            int depth, int max_depth, QuadResult& out) {
  if (whole.error <= tol || b - a <= 1e-14 * (1.0 + std::abs(a))) {
    out.value += whole.value;
    out.error += whole.error;
    ++out.panels;
    return;
  }
  if (depth >= max_depth)
    throw NumericError(fmt::format(
        "quadrature on [{:g},{:g}] did not reach tolerance {:g} (panel error {:g})", a, b, tol,
        whole.error));
  const double m = 0.5 * (a + b);
  refine(f, a, m, 0.5 * tol, panel(f, a, m), depth + 1, max_depth, out);
  refine(f, m, b, 0.5 * tol, panel(f, m, b), depth + 1, max_depth, out);
}

}  // namespace

QuadResult integrate(const std::function<double(double)>& f, double a, double b, double tol,
                     int max_depth) {
  QuadResult out;
  if (a == b) return out;
  if (!(tol > 0.0)) throw ArgumentError("integrate: tolerance must be positive");
  refine(f, a, b, tol, panel(f, a, b), 0, max_depth, out);
  if (!std::isfinite(out.value)) throw NumericError("quadrature produced a non-finite value");
  return out;
}

}  // namespace degen
