#pragma once

#include <string>

namespace resbound {

enum class GeneratorKind { Gaussian, StudentT, GeneralizedGaussian };

/// Density generator g of an elliptical law in a fixed dimension.
///
/// logg(t) is the full log-density of a standardized vector z with
/// z^T z = t, i.e. all normalizing constants are folded in, so that
/// p(x) = |Sigma|^{-1/2} exp(logg((x-mu)^T Sigma^{-1} (x-mu))) integrates to one.
/// The radial functions describe the law of the Mahalanobis distance t.
class DensityGenerator {
 public:
  static DensityGenerator gaussian(int dim);
  /// nu > 2 so that second moments exist; throws MomentError otherwise.
  static DensityGenerator student_t(double nu, int dim);
  /// Density proportional to exp(-t^s / 2), s > 0.
  static DensityGenerator generalized_gaussian(double s, int dim);

  GeneratorKind kind() const noexcept { return kind_; }
  /// nu for StudentT, s for GeneralizedGaussian, 0 for Gaussian.
  double shape() const noexcept { return shape_; }
  int dim() const noexcept { return dim_; }

  double logg(double t) const;
  /// d logg / dt.
  double psi(double t) const;

  double radial_cdf(double t) const;
  /// Quantile of the Mahalanobis distance t; u in (0, 1).
  double mahalanobis_quantile(double u) const;
  /// Quantile of the modular radius R = sqrt(t).
  double radius_quantile(double u) const;
  /// Log-density of t.
  double radial_log_density(double t) const;

  /// Whether E[R^k] is finite.
  bool has_moment(double k) const noexcept;

  /// Stable textual identity, e.g. "student_t(4)".
  std::string describe() const;

  bool operator==(const DensityGenerator&) const = default;

 private:
  DensityGenerator(GeneratorKind kind, double shape, int dim);

  GeneratorKind kind_;
  double shape_;
  int dim_;
  double log_norm_;
};

/// log of the surface-area factor pi^{N/2} / Gamma(N/2) relating the density of
/// a spherical vector to the density of its squared norm.
double log_sphere_factor(int dim);

}  // namespace resbound
