#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>

namespace resbound {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Column-chunk width used by every batch reduction. Fixed so that results do
/// not depend on the worker count.
inline constexpr Eigen::Index kReductionChunk = 4096;

/// Empirical cross moment (1/M) * a * b^T over the columns of a and b.
/// Chunks are reduced in a fixed order with compensated summation.
Matrix empirical_cross(const Matrix& a, const Matrix& b);

/// Row means, compensated.
Vector row_means(const Matrix& values);

Matrix symmetrize(const Matrix& s);

double min_eigenvalue(const Matrix& s);
double max_eigenvalue(const Matrix& s);

/// Ratio of extreme absolute eigenvalues of a symmetric matrix; infinity
/// when the smallest one is zero.
double condition_number(const Matrix& s);

/// Pseudo-inverse of a symmetric PSD matrix. Eigenvalues at or below
/// rel_cutoff * max_eigenvalue are discarded. `rank` receives the kept count.
Matrix pinv_symmetric(const Matrix& s, double rel_cutoff, int* rank = nullptr);

/// Inverse of an SPD matrix through Cholesky; throws SingularFim when the
/// factorization fails or the matrix is numerically singular.
Matrix inverse_spd(const Matrix& s, double rel_cutoff = 1e-13);

/// ||a - b||_F / ||b||_F (absolute difference when b is zero).
double rel_frobenius(const Matrix& a, const Matrix& b);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string to_hex(std::uint64_t v);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace resbound
