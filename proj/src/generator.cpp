#include "resbound/generator.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>

#include "resbound/errors.hpp"
#include "resbound/numeric.hpp"

namespace resbound {

namespace {

void check_dim(int dim) {
  if (dim < 1) throw ModelError("generator dimension must be >= 1");
}

void check_unit(double u) {
  if (!(u > 0.0 && u < 1.0)) throw SamplingError("quantile level outside (0, 1)");
}

}  // namespace

double log_sphere_factor(int dim) {
  const double half = 0.5 * dim;
  return half * std::log(std::numbers::pi) - std::lgamma(half);
}

DensityGenerator::DensityGenerator(GeneratorKind kind, double shape, int dim)
    : kind_(kind), shape_(shape), dim_(dim), log_norm_(0.0) {
  const double n = dim;
  const double log_pi = std::log(std::numbers::pi);
  switch (kind_) {
    case GeneratorKind::Gaussian:
      log_norm_ = -0.5 * n * std::log(2.0 * std::numbers::pi);
      break;
    case GeneratorKind::StudentT:
      log_norm_ = std::lgamma(0.5 * (shape_ + n)) - std::lgamma(0.5 * shape_) -
                  0.5 * n * (std::log(shape_) + log_pi);
      break;
    case GeneratorKind::GeneralizedGaussian: {
      const double a = n / (2.0 * shape_);
      log_norm_ = std::log(shape_) + std::lgamma(0.5 * n) - 0.5 * n * log_pi - std::lgamma(a) -
                  a * std::log(2.0);
      break;
    }
  }
}

DensityGenerator DensityGenerator::gaussian(int dim) {
  check_dim(dim);
  return DensityGenerator(GeneratorKind::Gaussian, 0.0, dim);
}

DensityGenerator DensityGenerator::student_t(double nu, int dim) {
  check_dim(dim);
  if (!(nu > 2.0) || !std::isfinite(nu)) {
    throw MomentError("student_t requires finite nu > 2 for finite second moments (got " +
                      format_double(nu) + ")");
  }
  return DensityGenerator(GeneratorKind::StudentT, nu, dim);
}

DensityGenerator DensityGenerator::generalized_gaussian(double s, int dim) {
  check_dim(dim);
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw ModelError("generalized_gaussian requires s > 0");
  }
  return DensityGenerator(GeneratorKind::GeneralizedGaussian, s, dim);
}

double DensityGenerator::logg(double t) const {
  switch (kind_) {
    case GeneratorKind::Gaussian:
      return log_norm_ - 0.5 * t;
    case GeneratorKind::StudentT:
      return log_norm_ - 0.5 * (shape_ + dim_) * std::log1p(t / shape_);
    case GeneratorKind::GeneralizedGaussian:
      return log_norm_ - 0.5 * std::pow(t, shape_);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DensityGenerator::psi(double t) const {
  switch (kind_) {
    case GeneratorKind::Gaussian:
      return -0.5;
    case GeneratorKind::StudentT:
      return -0.5 * (shape_ + dim_) / (shape_ + t);
    case GeneratorKind::GeneralizedGaussian:
      return -0.5 * shape_ * std::pow(t, shape_ - 1.0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DensityGenerator::radial_log_density(double t) const {
  if (t <= 0.0) return -std::numeric_limits<double>::infinity();
  return log_sphere_factor(dim_) + (0.5 * dim_ - 1.0) * std::log(t) + logg(t);
}

double DensityGenerator::radial_cdf(double t) const {
  if (t <= 0.0) return 0.0;
  if (std::isinf(t)) return 1.0;
  switch (kind_) {
    case GeneratorKind::Gaussian:
      return boost::math::cdf(boost::math::chi_squared_distribution<double>(dim_), t);
    case GeneratorKind::StudentT:
      return boost::math::cdf(boost::math::fisher_f_distribution<double>(dim_, shape_),
                              t / dim_);
    case GeneratorKind::GeneralizedGaussian:
      return boost::math::cdf(boost::math::gamma_distribution<double>(dim_ / (2.0 * shape_)),
                              0.5 * std::pow(t, shape_));
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DensityGenerator::mahalanobis_quantile(double u) const {
  check_unit(u);
  try {
    switch (kind_) {
      case GeneratorKind::Gaussian:
        return boost::math::quantile(boost::math::chi_squared_distribution<double>(dim_), u);
      case GeneratorKind::StudentT:
        return dim_ *
               boost::math::quantile(boost::math::fisher_f_distribution<double>(dim_, shape_), u);
      case GeneratorKind::GeneralizedGaussian: {
        const double g = boost::math::quantile(
            boost::math::gamma_distribution<double>(dim_ / (2.0 * shape_)), u);
        return std::pow(2.0 * g, 1.0 / shape_);
      }
    }
  } catch (const std::exception& e) {
    throw SamplingError(std::string("radial quantile failed: ") + e.what());
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double DensityGenerator::radius_quantile(double u) const { return std::sqrt(mahalanobis_quantile(u)); }

bool DensityGenerator::has_moment(double k) const noexcept {
  if (k <= -static_cast<double>(dim_)) return false;
  if (kind_ == GeneratorKind::StudentT) return k < shape_;
  return true;
}

std::string DensityGenerator::describe() const {
  switch (kind_) {
    case GeneratorKind::Gaussian:
      return "gaussian";
    case GeneratorKind::StudentT:
      return "student_t(" + format_double(shape_) + ")";
    case GeneratorKind::GeneralizedGaussian:
      return "generalized_gaussian(" + format_double(shape_) + ")";
  }
  return "unknown";
}

}  // namespace resbound
