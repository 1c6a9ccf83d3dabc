#pragma once

#include <cstdint>
#include <vector>

#include "resbound/numeric.hpp"

namespace resbound {

/// Element of H^q realized on a shared batch: column m holds h(x_m).
/// Rows are centered on construction, so every instance has zero empirical mean.
class FunctionSample {
 public:
  FunctionSample(Matrix values, std::uint64_t batch_id);

  static FunctionSample zeros(int q, Eigen::Index m, std::uint64_t batch_id);

  int q() const noexcept { return static_cast<int>(values_.rows()); }
  Eigen::Index size() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  std::uint64_t batch_id() const noexcept { return batch_id_; }

  FunctionSample rows(const std::vector<int>& idx) const;
  /// Rows of a on top of rows of b.
  static FunctionSample stack(const FunctionSample& a, const FunctionSample& b);

  /// sqrt(<h, h>).
  double norm() const;

 private:
  Matrix values_;
  std::uint64_t batch_id_;
};

FunctionSample operator-(const FunctionSample& a, const FunctionSample& b);

void require_same_batch(const FunctionSample& a, const FunctionSample& b);

/// (1/M) sum_m h1(x_m)^T h2(x_m), compensated, fixed order.
double inner(const FunctionSample& h1, const FunctionSample& h2);

/// C_0(h) = (1/M) values * values^T.
Matrix cov0(const FunctionSample& h);

/// E_0{h v^T}.
Matrix cross0(const FunctionSample& h, const FunctionSample& v);

struct SpanPolicy {
  /// Gram eigenvalues at or below this fraction of the largest are dropped.
  double rel_cutoff = 1e-10;
  /// Adds ridge_scale * trace / k to the Gram diagonal before inversion.
  bool ridge = false;
  double ridge_scale = 1e-8;
  /// When false the Gram must be well conditioned (below max_condition) and
  /// is inverted exactly; otherwise SingularSpan.
  bool regularize = true;
  double max_condition = 1e12;
};

/// Linear span of k scalar functions evaluated on one batch.
class SpanBasis {
 public:
  SpanBasis(FunctionSample basis, SpanPolicy policy = {});

  /// Span of no functions: projections onto it are zero.
  static SpanBasis empty(Eigen::Index m, std::uint64_t batch_id);

  int k() const noexcept { return basis_.q(); }
  const FunctionSample& basis() const noexcept { return basis_; }
  const Matrix& gram() const noexcept { return gram_; }
  const Matrix& gram_inverse() const noexcept { return gram_inv_; }
  int gram_rank() const noexcept { return rank_; }
  double gram_condition() const noexcept { return condition_; }

 private:
  FunctionSample basis_;
  Matrix gram_;
  Matrix gram_inv_;
  int rank_ = 0;
  double condition_ = 1.0;
};

/// A = E_0{h v^T} C_0^{-1}(v).
Matrix projection_coefficients(const FunctionSample& h, const SpanBasis& span);

/// Orthogonal projection A v of h onto the span.
FunctionSample project_span(const FunctionSample& h, const SpanBasis& span);

/// h - project_span(h, span).
FunctionSample residual(const FunctionSample& h, const SpanBasis& span);

}  // namespace resbound
