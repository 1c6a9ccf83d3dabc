#pragma once

#include <cstdint>
#include <vector>

#include "resbound/model.hpp"
#include "resbound/rng.hpp"

namespace testing {

inline resbound::Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  resbound::CounterStream rng(seed);
  resbound::Matrix a(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) a(i, j) = rng.normal();
  }
  return a;
}

inline resbound::Matrix random_spd(int n, std::uint64_t seed) {
  const resbound::Matrix a = random_matrix(n, n, seed);
  return a * a.transpose() + n * resbound::Matrix::Identity(n, n);
}

inline resbound::Matrix random_orthogonal(int n, std::uint64_t seed) {
  Eigen::HouseholderQR<resbound::Matrix> qr(random_matrix(n, n, seed));
  return qr.householderQ();
}

/// The three generator shapes used throughout the suites.
inline std::vector<resbound::DensityGenerator> catalog(int n) {
  return {resbound::DensityGenerator::gaussian(n), resbound::DensityGenerator::student_t(4.0, n),
          resbound::DensityGenerator::generalized_gaussian(0.5, n)};
}

}  // namespace testing
