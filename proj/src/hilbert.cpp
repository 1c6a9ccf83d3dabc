#include "resbound/hilbert.hpp"

#include <algorithm>
#include <cmath>

#include "resbound/errors.hpp"

namespace resbound {

FunctionSample::FunctionSample(Matrix values, std::uint64_t batch_id)
    : values_(std::move(values)), batch_id_(batch_id) {
  if (!values_.allFinite()) throw Error("FunctionSample: non-finite evaluations");
  if (values_.cols() > 0) values_.colwise() -= row_means(values_);
}

FunctionSample FunctionSample::zeros(int q, Eigen::Index m, std::uint64_t batch_id) {
  return FunctionSample(Matrix::Zero(q, m), batch_id);
}

FunctionSample FunctionSample::rows(const std::vector<int>& idx) const {
  Matrix out(static_cast<Eigen::Index>(idx.size()), values_.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || idx[i] >= q()) throw ShapeError("FunctionSample::rows: index out of range");
    out.row(static_cast<Eigen::Index>(i)) = values_.row(idx[i]);
  }
  return FunctionSample(std::move(out), batch_id_);
}

FunctionSample FunctionSample::stack(const FunctionSample& a, const FunctionSample& b) {
  if (a.batch_id() != b.batch_id()) throw BatchMismatch("stack: samples from different batches");
  if (a.size() != b.size()) throw ShapeError("stack: sample sizes differ");
  Matrix out(a.q() + b.q(), a.size());
  out.topRows(a.q()) = a.values();
  out.bottomRows(b.q()) = b.values();
  return FunctionSample(std::move(out), a.batch_id());
}

double FunctionSample::norm() const { return std::sqrt(std::max(0.0, inner(*this, *this))); }

void require_same_batch(const FunctionSample& a, const FunctionSample& b) {
  if (a.batch_id() != b.batch_id()) {
    throw BatchMismatch("function samples come from different batches");
  }
  if (a.size() != b.size()) throw ShapeError("function samples have different sizes");
}

FunctionSample operator-(const FunctionSample& a, const FunctionSample& b) {
  require_same_batch(a, b);
  if (a.q() != b.q()) throw ShapeError("difference of function samples with different q");
  return FunctionSample(a.values() - b.values(), a.batch_id());
}

double inner(const FunctionSample& h1, const FunctionSample& h2) {
  require_same_batch(h1, h2);
  if (h1.q() != h2.q()) throw ShapeError("inner: q differs");
  if (h1.size() == 0) return 0.0;
  CompensatedSum s;
  const Matrix& a = h1.values();
  const Matrix& b = h2.values();
  for (Eigen::Index m = 0; m < a.cols(); ++m) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) s.add(a(i, m) * b(i, m));
  }
  return s.value() / static_cast<double>(a.cols());
}

Matrix cov0(const FunctionSample& h) { return symmetrize(empirical_cross(h.values(), h.values())); }

Matrix cross0(const FunctionSample& h, const FunctionSample& v) {
  require_same_batch(h, v);
  return empirical_cross(h.values(), v.values());
}

SpanBasis::SpanBasis(FunctionSample basis, SpanPolicy policy) : basis_(std::move(basis)) {
  const int k = basis_.q();
  gram_ = cov0(basis_);
  if (k == 0) {
    gram_inv_ = Matrix(0, 0);
    return;
  }
  condition_ = condition_number(gram_);
  Matrix g = gram_;
  if (policy.ridge) {
    g.diagonal().array() += policy.ridge_scale * gram_.trace() / k;
  }
  if (!policy.regularize) {
    if (!(condition_ <= policy.max_condition)) {
      throw SingularSpan("span Gram condition number " + format_double(condition_) +
                         " exceeds " + format_double(policy.max_condition));
    }
    gram_inv_ = symmetrize(Eigen::LLT<Matrix>(g).solve(Matrix::Identity(k, k)));
    rank_ = k;
    return;
  }
  gram_inv_ = pinv_symmetric(g, policy.rel_cutoff, &rank_);
}

SpanBasis SpanBasis::empty(Eigen::Index m, std::uint64_t batch_id) {
  return SpanBasis(FunctionSample::zeros(0, m, batch_id));
}

Matrix projection_coefficients(const FunctionSample& h, const SpanBasis& span) {
  require_same_batch(h, span.basis());
  if (span.k() == 0) return Matrix::Zero(h.q(), 0);
  return cross0(h, span.basis()) * span.gram_inverse();
}

FunctionSample project_span(const FunctionSample& h, const SpanBasis& span) {
  if (span.k() == 0) {
    require_same_batch(h, span.basis());
    return FunctionSample::zeros(h.q(), h.size(), h.batch_id());
  }
  const Matrix a = projection_coefficients(h, span);
  return FunctionSample(a * span.basis().values(), h.batch_id());
}

FunctionSample residual(const FunctionSample& h, const SpanBasis& span) {
  if (span.k() == 0) {
    require_same_batch(h, span.basis());
    return h;
  }
  return h - project_span(h, span);
}

}  // namespace resbound
