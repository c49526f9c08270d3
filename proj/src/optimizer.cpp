#include "balkest/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "balkest/errors.hpp"

namespace balkest {

bool Box::contains(std::span<const double> x) const {
  if (x.size() != size()) return false;
  for (std::size_t k = 0; k < size(); ++k) {
    if (!(x[k] >= lo[k] && x[k] <= hi[k])) return false;
  }
  return true;
}

void Box::validate() const {
  if (lo.size() != hi.size()) throw ParameterError("box bounds differ in length");
  for (std::size_t k = 0; k < size(); ++k) {
    if (!(lo[k] < hi[k]) || !std::isfinite(lo[k]) || !std::isfinite(hi[k])) {
      throw ParameterError("box needs finite lo < hi in every coordinate");
    }
  }
}

LogitTransform::LogitTransform(Box box, double clamp) : box_(std::move(box)), clamp_(clamp) {
  box_.validate();
}

std::vector<double> LogitTransform::to_box(std::span<const double> z) const {
  std::vector<double> x(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    const double zc = std::clamp(z[k], -clamp_, clamp_);
    x[k] = box_.lo[k] + (box_.hi[k] - box_.lo[k]) / (1.0 + std::exp(-zc));
  }
  return x;
}

std::vector<double> LogitTransform::to_free(std::span<const double> x) const {
  std::vector<double> z(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double u = (x[k] - box_.lo[k]) / (box_.hi[k] - box_.lo[k]);
    const double uc = std::clamp(u, 1e-12, 1.0 - 1e-12);
    z[k] = std::clamp(std::log(uc / (1.0 - uc)), -clamp_, clamp_);
  }
  return z;
}

namespace {

struct Simplex {
  std::vector<std::vector<double>> v;
  std::vector<double> f;

  void order() {
    std::vector<std::size_t> idx(f.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
    std::vector<std::vector<double>> v2;
    std::vector<double> f2;
    for (auto i : idx) {
      v2.push_back(std::move(v[i]));
      f2.push_back(f[i]);
    }
    v = std::move(v2);
    f = std::move(f2);
  }

  double diameter() const {
    double d = 0.0;
    for (std::size_t i = 1; i < v.size(); ++i) {
      for (std::size_t k = 0; k < v[0].size(); ++k) d = std::max(d, std::abs(v[i][k] - v[0][k]));
    }
    return d;
  }
};

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> x0, const NelderMeadOptions& options) {
  const std::size_t n = x0.size();
  NelderMeadResult out;
  auto eval = [&](const std::vector<double>& x) {
    ++out.evaluations;
    const double y = f(x);
    return std::isnan(y) ? std::numeric_limits<double>::infinity() : y;
  };

  std::vector<double> centre(x0.begin(), x0.end());
  double centre_value = eval(centre);
  if (n == 0) {
    out.x = centre;
    out.value = centre_value;
    out.converged = true;
    return out;
  }

  for (std::size_t round = 0; round <= options.restarts; ++round) {
    Simplex s;
    s.v.push_back(centre);
    s.f.push_back(centre_value);
    for (std::size_t k = 0; k < n; ++k) {
      auto p = centre;
      p[k] += options.initial_step;
      s.v.push_back(p);
      s.f.push_back(eval(p));
    }
    bool converged = false;
    while (out.evaluations < options.max_evaluations) {
      s.order();
      const double spread = s.f[n] - s.f[0];
      if (s.diameter() < options.diameter_tol ||
          (std::isfinite(spread) && spread <= options.value_tol * (1.0 + std::abs(s.f[0])))) {
        converged = true;
        break;
      }
      ++out.iterations;
      std::vector<double> mid(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) mid[k] += s.v[i][k] / static_cast<double>(n);
      }
      auto along = [&](double coef) {
        std::vector<double> p(n);
        for (std::size_t k = 0; k < n; ++k) p[k] = mid[k] + coef * (s.v[n][k] - mid[k]);
        return p;
      };
      const auto xr = along(-1.0);
      const double fr = eval(xr);
      if (fr < s.f[0]) {
        const auto xe = along(-2.0);
        const double fe = eval(xe);
        if (fe < fr) {
          s.v[n] = xe;
          s.f[n] = fe;
        } else {
          s.v[n] = xr;
          s.f[n] = fr;
        }
        continue;
      }
      if (fr < s.f[n - 1]) {
        s.v[n] = xr;
        s.f[n] = fr;
        continue;
      }
      const bool outside = fr < s.f[n];
      const auto xc = along(outside ? -0.5 : 0.5);
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.f[n])) {
        s.v[n] = xc;
        s.f[n] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t k = 0; k < n; ++k) s.v[i][k] = s.v[0][k] + 0.5 * (s.v[i][k] - s.v[0][k]);
        s.f[i] = eval(s.v[i]);
      }
    }
    s.order();
    const bool improved = s.f[0] < centre_value;
    centre = s.v[0];
    centre_value = s.f[0];
    out.converged = converged;
    if (round > 0) ++out.restarts;
    if (!converged || (round > 0 && !improved)) break;
  }
  out.x = centre;
  out.value = centre_value;
  return out;
}

std::vector<std::vector<double>> latin_hypercube(const Box& box, std::size_t n, Rng& rng) {
  box.validate();
  const std::size_t d = box.size();
  std::vector<std::vector<double>> pts(n, std::vector<double>(d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    // Fisher-Yates with our own draws: std::shuffle's output is
    // implementation-defined.
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(unit(rng) * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(j, i - 1)]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + unit(rng)) / static_cast<double>(n);
      pts[i][k] = box.lo[k] + u * (box.hi[k] - box.lo[k]);
    }
  }
  return pts;
}

}  // namespace balkest
