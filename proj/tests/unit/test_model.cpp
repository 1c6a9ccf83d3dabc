#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "oracles.hpp"
#include "resbound/errors.hpp"
#include "resbound/model.hpp"

using namespace resbound;

namespace {

oracle::Kind oracle_kind(const DensityGenerator& g) {
  switch (g.kind()) {
    case GeneratorKind::Gaussian:
      return oracle::Kind::Gaussian;
    case GeneratorKind::StudentT:
      return oracle::Kind::StudentT;
    case GeneratorKind::GeneralizedGaussian:
      return oracle::Kind::GeneralizedGaussian;
  }
  return oracle::Kind::Gaussian;
}

Matrix on_trace(const Matrix& s) { return s * (s.rows() / s.trace()); }

}  // namespace

TEST_CASE("res_logpdf: standard normal values") {
  const ResModel m1(Vector::Zero(1), Matrix::Identity(1, 1), DensityGenerator::gaussian(1));
  CHECK(res_logpdf(Vector::Zero(1), m1) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));

  const ResModel m2(Vector::Zero(2), Matrix::Identity(2, 2), DensityGenerator::gaussian(2));
  const double expected = -std::log(2.0 * std::numbers::pi) - 1.0;
  CHECK(res_logpdf(Vector::Ones(2), m2) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-2.8378770664093453).epsilon(1e-12));
}

TEST_CASE("res_logpdf: student t against closed-form kernel") {
  const int n = 2;
  const ResModel m(Vector::Zero(n), Matrix::Identity(n, n), DensityGenerator::student_t(3.0, n));
  const Vector x = Vector::Ones(n);
  const double t = x.squaredNorm();
  const double ref = oracle::log_kernel(oracle::Kind::StudentT, 3.0, n, t) +
                     oracle::log_norm(oracle::Kind::StudentT, 3.0, n);
  CHECK(res_logpdf(x, m) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("res_logpdf: general Gaussian matches textbook formula") {
  for (int n : {2, 3, 5}) {
    const Matrix sigma = on_trace(testing::random_spd(n, 11 + n));
    const Vector mu = testing::random_matrix(n, 1, 3 + n);
    const ResModel m(mu, sigma, DensityGenerator::gaussian(n));
    const Vector x = testing::random_matrix(n, 1, 99 + n);
    Eigen::FullPivLU<Matrix> lu(sigma);
    const Vector r = x - mu;
    const double ref = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(lu.determinant()) -
                       0.5 * r.dot(lu.solve(r));
    CHECK(m.logpdf(x) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("mahalanobis: examples and solve oracle") {
  CHECK(mahalanobis(Vector::Ones(3), Vector::Ones(3), Matrix::Identity(3, 3)) == 0.0);
  Vector x(2);
  x << 3.0, 4.0;
  CHECK(mahalanobis(x, Vector::Zero(2), Matrix::Identity(2, 2)) == doctest::Approx(25.0));

  const Matrix s = testing::random_spd(4, 5);
  const Vector mu = testing::random_matrix(4, 1, 6);
  const Vector y = testing::random_matrix(4, 1, 7);
  const Vector r = y - mu;
  const double ref = r.dot(Eigen::FullPivLU<Matrix>(s).solve(r));
  CHECK(mahalanobis(y, mu, s) == doctest::Approx(ref).epsilon(1e-12));

  CHECK_THROWS_AS(mahalanobis(Vector::Zero(3), Vector::Zero(2), Matrix::Identity(2, 2)), ShapeError);
  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(mahalanobis(Vector::Zero(2), Vector::Zero(2), bad), ModelError);
}

TEST_CASE("ResModel rejects bad input") {
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = bad(1, 0) = 2.0;
  CHECK_THROWS_AS(ResModel(Vector::Zero(2), bad, DensityGenerator::gaussian(2)), ModelError);
  CHECK_THROWS_AS(ResModel(Vector::Zero(3), Matrix::Identity(2, 2), DensityGenerator::gaussian(2)), ShapeError);
  CHECK_THROWS_AS(DensityGenerator::student_t(2.0, 2), MomentError);
  CHECK_THROWS_AS(DensityGenerator::generalized_gaussian(0.0, 2), ModelError);
}

TEST_CASE("packing: sizes, round trip and constraint") {
  CHECK(n_shape_params(2) == 2);
  CHECK(n_params(2) == 4);
  CHECK(n_shape_params(4) == 9);
  for (Constraint c : {Constraint::TraceN, Constraint::Det1}) {
    for (int n : {1, 2, 3, 4}) {
      const Matrix sigma = normalize_scatter(testing::random_spd(n, 40 + n), c);
      const ResModel m(testing::random_matrix(n, 1, n), sigma, DensityGenerator::gaussian(n), c);
      const Vector theta = pack_params(m);
      CHECK(theta.size() == n_params(n));
      const auto [mu, s] = unpack_params(theta, n, c);
      CHECK((mu - m.mu()).norm() == doctest::Approx(0.0).epsilon(1e-12));
      CHECK(rel_frobenius(s, m.sigma()) < 1e-12);
      if (c == Constraint::TraceN) {
        CHECK(s.trace() == doctest::Approx(n).epsilon(1e-14));
      } else {
        CHECK(s.determinant() == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("packing: the eliminated entry carries no coordinate") {
  const Matrix sigma = on_trace(testing::random_spd(3, 8));
  Matrix moved = sigma;
  moved(2, 2) += 0.3;
  CHECK((pack_shape(moved) - pack_shape(sigma)).norm() == 0.0);
  // unpacking lands back on the surface
  CHECK(rel_frobenius(unpack_shape(pack_shape(moved), 3, Constraint::TraceN), sigma) < 1e-14);
}

TEST_CASE("shape directions stay tangent to the constraint") {
  const Matrix sigma = normalize_scatter(testing::random_spd(3, 9), Constraint::Det1);
  const Matrix sinv = sigma.inverse();
  for (const Matrix& d : shape_directions(sigma, Constraint::Det1)) {
    CHECK(std::abs((sinv * d).trace()) < 1e-12);
  }
  for (const Matrix& d : shape_directions(on_trace(sigma), Constraint::TraceN)) {
    CHECK(std::abs(d.trace()) < 1e-15);
  }
}

TEST_CASE("ParamPartition validation") {
  const auto p = ParamPartition::make(2, InterestSet::Mu);
  CHECK(p.q() == 2);
  CHECK(p.r() == 2);
  CHECK(ParamPartition::make(3, InterestSet::Shape).q() == 5);
  CHECK(ParamPartition::make(3, InterestSet::MuShape).r() == 0);
  CHECK_THROWS(ParamPartition::from_indices({0}, {0, 1}, 2));
  CHECK_THROWS(ParamPartition::from_indices({}, {0, 1}, 2));
  CHECK_THROWS(ParamPartition::from_indices({0}, {2}, 3));
}

TEST_CASE("invariant: densities integrate to one") {
  for (int n : {1, 2, 3, 4}) {
    for (const auto& g : testing::catalog(n)) {
      const double z = oracle::radial_integral(n, [&](double t) { return std::exp(g.logg(t)); });
      CHECK_MESSAGE(z == doctest::Approx(1.0).epsilon(1e-6), g.describe() << " N=" << n);
    }
  }
}

TEST_CASE("invariant: logg matches the closed-form kernel up to its constant") {
  for (int n : {1, 3}) {
    for (const auto& g : testing::catalog(n)) {
      const auto k = oracle_kind(g);
      const double c = oracle::log_norm(k, g.shape(), n);
      for (double t : {0.01, 0.5, 2.0, 7.0, 30.0}) {
        CHECK(g.logg(t) == doctest::Approx(oracle::log_kernel(k, g.shape(), n, t) + c).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("invariant: psi is the derivative of logg") {
  for (const auto& g : testing::catalog(3)) {
    for (double t : {0.05, 0.7, 1.0, 3.0, 12.0, 50.0}) {
      const double h = 1e-5 * t;
      const double fd = (g.logg(t + h) - g.logg(t - h)) / (2.0 * h);
      CHECK(g.psi(t) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("invariant: orthogonal invariance") {
  const int n = 4;
  for (const auto& g : testing::catalog(n)) {
    const ResModel m(Vector::Zero(n), Matrix::Identity(n, n), g);
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Matrix q = testing::random_orthogonal(n, 100 + s);
      const Vector x = testing::random_matrix(n, 1, 200 + s);
      CHECK(std::abs(m.logpdf(q * x) - m.logpdf(x)) < 1e-10);
    }
  }
}

TEST_CASE("fingerprint identifies the model") {
  const ResModel a(Vector::Zero(2), Matrix::Identity(2, 2), DensityGenerator::gaussian(2));
  const ResModel b(Vector::Zero(2), Matrix::Identity(2, 2), DensityGenerator::student_t(5, 2));
  const ResModel c(Vector::Zero(2), 3.0 * Matrix::Identity(2, 2), DensityGenerator::gaussian(2));
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() == c.fingerprint());  // same point after normalization
}
