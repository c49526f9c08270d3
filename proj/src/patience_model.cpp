#include "balkest/patience_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "balkest/errors.hpp"

namespace balkest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

std::string to_string(PatienceFamily family) {
  switch (family) {
    case PatienceFamily::none: return "none";
    case PatienceFamily::exponential: return "exponential";
    case PatienceFamily::hyperexponential: return "hyperexponential";
    case PatienceFamily::lomax: return "lomax";
    case PatienceFamily::geometric: return "geometric";
  }
  return "unknown";
}

PatienceFamily patience_family_from_string(const std::string& name) {
  if (name == "none") return PatienceFamily::none;
  if (name == "exponential") return PatienceFamily::exponential;
  if (name == "hyperexponential") return PatienceFamily::hyperexponential;
  if (name == "lomax" || name == "pareto") return PatienceFamily::lomax;
  if (name == "geometric") return PatienceFamily::geometric;
  throw ParameterError("unknown patience family '" + name + "'");
}

PatienceModel PatienceModel::none() { return {PatienceFamily::none, 0}; }
PatienceModel PatienceModel::exponential() { return {PatienceFamily::exponential, 1}; }
PatienceModel PatienceModel::lomax() { return {PatienceFamily::lomax, 0}; }
PatienceModel PatienceModel::geometric() { return {PatienceFamily::geometric, 0}; }

PatienceModel PatienceModel::hyperexponential(std::size_t components) {
  if (components < 2) throw ParameterError("hyperexponential patience needs >= 2 components");
  return {PatienceFamily::hyperexponential, components};
}

std::size_t PatienceModel::arity() const {
  switch (family_) {
    case PatienceFamily::none: return 0;
    case PatienceFamily::exponential: return 1;
    case PatienceFamily::hyperexponential: return 2 * components_ - 1;
    case PatienceFamily::lomax: return 2;
    case PatienceFamily::geometric: return 1;
  }
  return 0;
}

std::vector<std::string> PatienceModel::parameter_names() const {
  switch (family_) {
    case PatienceFamily::none: return {};
    case PatienceFamily::exponential: return {"rate"};
    case PatienceFamily::hyperexponential: {
      std::vector<std::string> names;
      for (std::size_t k = 1; k < components_; ++k) names.push_back("weight_" + std::to_string(k));
      for (std::size_t k = 1; k <= components_; ++k) names.push_back("rate_" + std::to_string(k));
      return names;
    }
    case PatienceFamily::lomax: return {"scale", "shape"};
    case PatienceFamily::geometric: return {"p"};
  }
  return {};
}

std::vector<double> PatienceModel::default_lower() const {
  switch (family_) {
    case PatienceFamily::none: return {};
    case PatienceFamily::exponential: return {0.01};
    case PatienceFamily::hyperexponential: {
      std::vector<double> lo(components_ - 1, 0.01);
      lo.insert(lo.end(), components_, 0.005);
      return lo;
    }
    case PatienceFamily::lomax: return {0.05, 0.05};
    case PatienceFamily::geometric: return {0.001};
  }
  return {};
}

std::vector<double> PatienceModel::default_upper() const {
  switch (family_) {
    case PatienceFamily::none: return {};
    case PatienceFamily::exponential: return {10.0};
    case PatienceFamily::hyperexponential: {
      std::vector<double> hi(components_ - 1, 0.99 / static_cast<double>(components_ - 1));
      hi.insert(hi.end(), components_, 20.0);
      return hi;
    }
    case PatienceFamily::lomax: return {50.0, 50.0};
    case PatienceFamily::geometric: return {0.999};
  }
  return {};
}

bool PatienceModel::in_domain(std::span<const double> theta) const {
  if (theta.size() != arity() || !all_finite(theta)) return false;
  switch (family_) {
    case PatienceFamily::none: return true;
    case PatienceFamily::exponential: return theta[0] > 0.0;
    case PatienceFamily::hyperexponential: {
      double listed = 0.0;
      for (std::size_t k = 0; k + 1 < components_; ++k) {
        if (!(theta[k] > 0.0 && theta[k] < 1.0)) return false;
        listed += theta[k];
      }
      if (!(listed < 1.0)) return false;
      for (std::size_t k = components_ - 1; k < theta.size(); ++k) {
        if (!(theta[k] > 0.0)) return false;
      }
      return true;
    }
    case PatienceFamily::lomax: return theta[0] > 0.0 && theta[1] > 0.0;
    case PatienceFamily::geometric: return theta[0] > 0.0 && theta[0] < 1.0;
  }
  return false;
}

void PatienceModel::validate(std::span<const double> theta) const {
  if (theta.size() != arity()) {
    std::ostringstream msg;
    msg << to_string(family_) << " patience expects " << arity() << " parameters, got "
        << theta.size();
    throw ParameterError(msg.str());
  }
  if (!in_domain(theta)) {
    throw ParameterError(to_string(family_) + " patience parameters outside their domain");
  }
}

BoundPatience PatienceModel::bind(std::span<const double> theta) const {
  validate(theta);
  BoundPatience bound;
  bound.family_ = family_;
  switch (family_) {
    case PatienceFamily::none:
      bound.mixture_ = {{1.0, 0.0}};
      break;
    case PatienceFamily::exponential:
      bound.mixture_ = {{1.0, theta[0]}};
      break;
    case PatienceFamily::hyperexponential: {
      double rest = 1.0;
      for (std::size_t k = 0; k + 1 < components_; ++k) {
        bound.mixture_.push_back({theta[k], theta[components_ - 1 + k]});
        rest -= theta[k];
      }
      bound.mixture_.push_back({rest, theta[2 * components_ - 2]});
      break;
    }
    case PatienceFamily::lomax:
      bound.scale_ = theta[0];
      bound.shape_ = theta[1];
      break;
    case PatienceFamily::geometric:
      bound.ratio_ = 1.0 - theta[0];
      bound.log_ratio_ = std::log1p(-theta[0]);
      break;
  }
  return bound;
}

double PatienceModel::survival(std::span<const double> theta, double x) const {
  return bind(theta).survival(x);
}

double PatienceModel::log_survival(std::span<const double> theta, double x) const {
  return bind(theta).log_survival(x);
}

double PatienceModel::sample(std::span<const double> theta, Rng& rng) const {
  return bind(theta).sample(rng);
}

double PatienceModel::survival_at_infinity(std::span<const double> theta) const {
  validate(theta);
  return family_ == PatienceFamily::none ? 1.0 : 0.0;
}

double BoundPatience::survival(double x) const {
  if (!(x > 0.0)) return 1.0;
  switch (family_) {
    case PatienceFamily::none:
    case PatienceFamily::exponential:
    case PatienceFamily::hyperexponential: {
      double s = 0.0;
      for (const auto& c : mixture_) s += c.weight * std::exp(-c.rate * x);
      return s;
    }
    case PatienceFamily::lomax: return std::pow(scale_ / (scale_ + x), shape_);
    case PatienceFamily::geometric: return std::pow(ratio_, std::ceil(x));
  }
  return 1.0;
}

double BoundPatience::log_survival(double x) const {
  if (!(x > 0.0)) return 0.0;
  switch (family_) {
    case PatienceFamily::none: return 0.0;
    case PatienceFamily::exponential: return -mixture_[0].rate * x;
    case PatienceFamily::hyperexponential: {
      double top = -kInf;
      for (const auto& c : mixture_) top = std::max(top, std::log(c.weight) - c.rate * x);
      double acc = 0.0;
      for (const auto& c : mixture_) acc += std::exp(std::log(c.weight) - c.rate * x - top);
      return top + std::log(acc);
    }
    case PatienceFamily::lomax: return shape_ * (std::log(scale_) - std::log(scale_ + x));
    case PatienceFamily::geometric: return std::ceil(x) * log_ratio_;
  }
  return 0.0;
}

double BoundPatience::sample(Rng& rng) const {
  switch (family_) {
    case PatienceFamily::none: return kInf;
    case PatienceFamily::exponential:
      return std::exponential_distribution<double>(mixture_[0].rate)(rng);
    case PatienceFamily::hyperexponential: {
      const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      double acc = 0.0;
      std::size_t pick = mixture_.size() - 1;
      for (std::size_t k = 0; k + 1 < mixture_.size(); ++k) {
        acc += mixture_[k].weight;
        if (u < acc) {
          pick = k;
          break;
        }
      }
      return std::exponential_distribution<double>(mixture_[pick].rate)(rng);
    }
    case PatienceFamily::lomax: {
      // S(x) = U  <=>  x = scale (U^{-1/shape} - 1), U uniform on (0, 1].
      const double u = 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      return scale_ * std::expm1(-std::log(u) / shape_);
    }
    case PatienceFamily::geometric:
      return static_cast<double>(std::geometric_distribution<long long>(1.0 - ratio_)(rng));
  }
  return kInf;
}

ServiceModel ServiceModel::exponential(double mean) {
  if (!(mean > 0.0) || !std::isfinite(mean)) throw ParameterError("service mean must be positive");
  return {ServiceFamily::exponential, 1.0, mean};
}

ServiceModel ServiceModel::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
    throw ParameterError("gamma service needs positive shape and scale");
  }
  return {ServiceFamily::gamma, shape, scale};
}

double ServiceModel::mean() const { return shape_ * scale_; }

double ServiceModel::variance() const { return shape_ * scale_ * scale_; }

double ServiceModel::sample(Rng& rng) const {
  for (;;) {
    double b = 0.0;
    if (family_ == ServiceFamily::exponential) {
      b = std::exponential_distribution<double>(1.0 / scale_)(rng);
    } else {
      b = std::gamma_distribution<double>(shape_, scale_)(rng);
    }
    if (b > 0.0 && std::isfinite(b)) return b;
  }
}

}  // namespace balkest
