#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "balkest/random.hpp"

namespace balkest {

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;

  std::size_t size() const { return lo.size(); }
  bool contains(std::span<const double> x) const;
  // Throws ParameterError unless lo < hi componentwise and the sizes agree.
  void validate() const;
};

// Componentwise scaled logistic map R^d -> (lo, hi).
class LogitTransform {
 public:
  explicit LogitTransform(Box box, double clamp = 20.0);

  std::vector<double> to_box(std::span<const double> z) const;
  std::vector<double> to_free(std::span<const double> x) const;
  const Box& box() const { return box_; }

 private:
  Box box_;
  double clamp_;
};

struct NelderMeadOptions {
  double initial_step = 0.5;
  // Stop when every vertex is within this sup-norm distance of the best one ...
  double diameter_tol = 1e-8;
  // ... or the vertex values agree to this relative spread.
  double value_tol = 1e-13;
  std::size_t max_evaluations = 100000;
  // Fresh simplices built around the converged point.
  std::size_t restarts = 2;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t iterations = 0;
  std::size_t restarts = 0;
  bool converged = false;
};

// Minimizes f; +infinity marks infeasible points.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& options = {});

// n points, one per stratum in every coordinate, jittered uniformly.
std::vector<std::vector<double>> latin_hypercube(const Box& box, std::size_t n, Rng& rng);

}  // namespace balkest
