#pragma once

#include <functional>

namespace balkest {

struct QuadratureSettings {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  unsigned max_depth = 30;
};

// Adaptive Gauss-Kronrod (15-point) integral of f over [a, b].
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureSettings& settings = {});

}  // namespace balkest
