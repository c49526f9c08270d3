#include "balkest/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

namespace balkest {

namespace {

double integrate_split(const std::function<double(double)>& f, double a, double b,
                       const QuadratureSettings& settings, int splits_left) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, settings.max_depth, settings.rel_tol, &error, &l1);
  // Boost stops on the relative criterion only; bisect when the estimate
  // misses both the relative and the absolute target.
  if (splits_left > 0 && error > settings.abs_tol && error > settings.rel_tol * std::abs(value)) {
    const double mid = 0.5 * (a + b);
    return integrate_split(f, a, mid, settings, splits_left - 1) +
           integrate_split(f, mid, b, settings, splits_left - 1);
  }
  return value;
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings) {
  if (a == b) return 0.0;
  // Boost 1.74 compares an unscaled error estimate against a scaled
  // tolerance, so very short intervals never converge. Integrate on [0, 1].
  const double width = b - a;
  const auto g = [&](double x) { return width * f(a + width * x); };
  return integrate_split(g, 0.0, 1.0, settings, 6);
}

}  // namespace balkest
