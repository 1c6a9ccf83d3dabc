#include "resbound/numeric.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "resbound/errors.hpp"
#include "resbound/parallel.hpp"

namespace resbound {

Matrix empirical_cross(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("empirical_cross: column counts differ");
  }
  const Eigen::Index m = a.cols();
  if (m == 0) {
    return Matrix::Zero(a.rows(), b.rows());
  }
  const auto n_chunks = static_cast<std::size_t>((m + kReductionChunk - 1) / kReductionChunk);
  std::vector<Matrix> partial(n_chunks);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kReductionChunk;
    const Eigen::Index width = std::min(kReductionChunk, m - begin);
    partial[c].noalias() = a.middleCols(begin, width) * b.middleCols(begin, width).transpose();
  });
  Matrix out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
      CompensatedSum s;
      for (const auto& p : partial) s.add(p(i, j));
      out(i, j) = s.value() / static_cast<double>(m);
    }
  }
  return out;
}

Vector row_means(const Matrix& values) {
  Vector out(values.rows());
  const auto m = static_cast<double>(values.cols());
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    CompensatedSum s;
    for (Eigen::Index j = 0; j < values.cols(); ++j) s.add(values(i, j));
    out(i) = values.cols() > 0 ? s.value() / m : 0.0;
  }
  return out;
}

Matrix symmetrize(const Matrix& s) { return 0.5 * (s + s.transpose()); }

double min_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double max_eigenvalue(const Matrix& s) {
  if (s.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

double condition_number(const Matrix& s) {
  if (s.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s), Eigen::EigenvaluesOnly);
  const Vector ev = es.eigenvalues().cwiseAbs();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Matrix pinv_symmetric(const Matrix& s, double rel_cutoff, int* rank) {
  const Eigen::Index k = s.rows();
  if (k == 0) {
    if (rank) *rank = 0;
    return Matrix(0, 0);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(s));
  const Vector& ev = es.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 0.0);
  const double cut = rel_cutoff * top;
  Vector inv = Vector::Zero(k);
  int kept = 0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (ev(i) > cut && ev(i) > 0.0) {
      inv(i) = 1.0 / ev(i);
      ++kept;
    }
  }
  if (rank) *rank = kept;
  const Matrix& v = es.eigenvectors();
  return symmetrize(v * inv.asDiagonal() * v.transpose());
}

Matrix inverse_spd(const Matrix& s, double rel_cutoff) {
  if (s.rows() == 0) return Matrix(0, 0);
  const Matrix sym = symmetrize(s);
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw SingularFim("matrix is not positive definite");
  }
  const double lo = min_eigenvalue(sym);
  const double hi = max_eigenvalue(sym);
  if (!(lo > rel_cutoff * hi)) {
    throw SingularFim("matrix is numerically singular (condition " + format_double(hi / lo) + ")");
  }
  return symmetrize(llt.solve(Matrix::Identity(s.rows(), s.cols())));
}

double rel_frobenius(const Matrix& a, const Matrix& b) {
  const double denom = b.norm();
  const double diff = (a - b).norm();
  return denom > 0.0 ? diff / denom : diff;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string to_hex(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

}  // namespace resbound
