#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "resbound/generator.hpp"
#include "resbound/numeric.hpp"

namespace resbound {

/// Scale convention that makes the scatter identifiable jointly with g.
enum class Constraint { TraceN, Det1 };

std::string to_string(Constraint c);

/// One point of the RES semiparametric model.
///
/// The scatter is canonicalized on construction: it is rescaled onto the
/// constraint surface and its eliminated coordinate (the last diagonal entry)
/// is recomputed from the others, so the constraint holds to rounding.
class ResModel {
 public:
  ResModel(Vector mu, const Matrix& sigma, DensityGenerator generator,
           Constraint constraint = Constraint::TraceN);

  int dim() const noexcept { return static_cast<int>(mu_.size()); }
  const Vector& mu() const noexcept { return mu_; }
  const Matrix& sigma() const noexcept { return sigma_; }
  const Matrix& sigma_inv() const noexcept { return sigma_inv_; }
  /// Lower Cholesky factor of sigma.
  const Matrix& sigma_chol() const noexcept { return chol_; }
  double log_det_sigma() const noexcept { return log_det_; }
  const DensityGenerator& generator() const noexcept { return generator_; }
  Constraint constraint() const noexcept { return constraint_; }

  double mahalanobis(const Eigen::Ref<const Vector>& x) const;
  double logpdf(const Eigen::Ref<const Vector>& x) const;

  std::string describe() const;
  std::uint64_t fingerprint() const;

 private:
  Vector mu_;
  Matrix sigma_;
  Matrix sigma_inv_;
  Matrix chol_;
  double log_det_;
  DensityGenerator generator_;
  Constraint constraint_;
};

/// Log of the normalized RES density at x.
double res_logpdf(const Eigen::Ref<const Vector>& x, const ResModel& model);

/// (x - mu)^T sigma^{-1} (x - mu). Throws ShapeError on dimension mismatch and
/// ModelError when sigma is not SPD.
double mahalanobis(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu,
                   const Matrix& sigma);

// Parameter vector: (mu_1..mu_N, vech(Sigma) row-major lower triangle without
// the last diagonal entry, which the constraint determines).

int n_shape_params(int dim);
int n_params(int dim);

/// (row, col) of each packed shape coordinate, row >= col.
std::vector<std::pair<int, int>> shape_coordinates(int dim);

/// Rescales an SPD matrix onto the constraint surface.
Matrix normalize_scatter(const Matrix& sigma, Constraint constraint);

Vector pack_shape(const Matrix& sigma);
/// Rebuilds sigma from packed shape coordinates, solving the constraint for
/// the eliminated entry. Throws ModelError when the result is not SPD.
Matrix unpack_shape(const Eigen::Ref<const Vector>& shape, int dim, Constraint constraint);

Vector pack_params(const ResModel& model);
std::pair<Vector, Matrix> unpack_params(const Eigen::Ref<const Vector>& theta, int dim,
                                        Constraint constraint);

/// dSigma/dtheta_k for every packed shape coordinate, including the induced
/// change of the eliminated entry (first-order constraint tangent).
std::vector<Matrix> shape_directions(const Matrix& sigma, Constraint constraint);

enum class InterestSet { Mu, Shape, MuShape };

InterestSet parse_interest(const std::string& s);
std::string to_string(InterestSet s);

/// Split of the packed parameter vector into interest and nuisance parts.
struct ParamPartition {
  std::vector<int> interest_idx;
  std::vector<int> nuisance_idx;

  int q() const noexcept { return static_cast<int>(interest_idx.size()); }
  int r() const noexcept { return static_cast<int>(nuisance_idx.size()); }
  int d() const noexcept { return q() + r(); }

  /// Validates disjointness, coverage of [0, total) and q >= 1.
  static ParamPartition from_indices(std::vector<int> interest, std::vector<int> nuisance,
                                     int total);
  static ParamPartition make(int dim, InterestSet interest);
};

}  // namespace resbound
