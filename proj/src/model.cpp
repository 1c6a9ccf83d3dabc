#include "resbound/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "resbound/errors.hpp"

namespace resbound {

std::string to_string(Constraint c) { return c == Constraint::TraceN ? "trace" : "det"; }

int n_shape_params(int dim) { return dim * (dim + 1) / 2 - 1; }
int n_params(int dim) { return dim + n_shape_params(dim); }

std::vector<std::pair<int, int>> shape_coordinates(int dim) {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(std::max(0, n_shape_params(dim))));
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j <= i; ++j) {
      if (i == dim - 1 && j == dim - 1) continue;
      out.emplace_back(i, j);
    }
  }
  return out;
}

namespace {

void require_spd(const Matrix& sigma, const char* what) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw ShapeError(std::string(what) + ": scatter must be a non-empty square matrix");
  }
  if (!sigma.allFinite()) throw ModelError(std::string(what) + ": scatter has non-finite entries");
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + sigma.cwiseAbs().maxCoeff())) {
    throw ModelError(std::string(what) + ": scatter is not symmetric");
  }
  Eigen::LLT<Matrix> llt(symmetrize(sigma));
  if (llt.info() != Eigen::Success) {
    throw ModelError(std::string(what) + ": scatter is not positive definite");
  }
}

}  // namespace

Matrix normalize_scatter(const Matrix& sigma, Constraint constraint) {
  require_spd(sigma, "normalize_scatter");
  const Matrix s = symmetrize(sigma);
  const double n = static_cast<double>(s.rows());
  if (constraint == Constraint::TraceN) return s * (n / s.trace());
  Eigen::LLT<Matrix> llt(s);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return s * std::exp(-log_det / n);
}

Vector pack_shape(const Matrix& sigma) {
  const auto coords = shape_coordinates(static_cast<int>(sigma.rows()));
  Vector out(static_cast<Eigen::Index>(coords.size()));
  for (std::size_t k = 0; k < coords.size(); ++k) {
    out(static_cast<Eigen::Index>(k)) = sigma(coords[k].first, coords[k].second);
  }
  return out;
}

Matrix unpack_shape(const Eigen::Ref<const Vector>& shape, int dim, Constraint constraint) {
  if (dim < 1) throw ShapeError("unpack_shape: dimension must be >= 1");
  if (shape.size() != n_shape_params(dim)) throw ShapeError("unpack_shape: wrong parameter count");
  const auto coords = shape_coordinates(dim);
  Matrix s = Matrix::Zero(dim, dim);
  for (std::size_t k = 0; k < coords.size(); ++k) {
    const auto [i, j] = coords[k];
    s(i, j) = shape(static_cast<Eigen::Index>(k));
    s(j, i) = s(i, j);
  }
  const int last = dim - 1;
  if (constraint == Constraint::TraceN) {
    s(last, last) = static_cast<double>(dim) - s.diagonal().head(last).sum();
  } else if (dim == 1) {
    s(0, 0) = 1.0;
  } else {
    const Matrix a = s.topLeftCorner(last, last);
    const Vector b = s.col(last).head(last);
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
      throw ModelError("unpack_shape: leading block is not positive definite");
    }
    const double det_a = std::exp(2.0 * llt.matrixLLT().diagonal().array().log().sum());
    s(last, last) = 1.0 / det_a + b.dot(llt.solve(b));
  }
  Eigen::LLT<Matrix> check(s);
  if (!s.allFinite() || check.info() != Eigen::Success) {
    throw ModelError("unpack_shape: parameters imply a non-SPD scatter");
  }
  return s;
}

ResModel::ResModel(Vector mu, const Matrix& sigma, DensityGenerator generator, Constraint constraint)
    : mu_(std::move(mu)), generator_(generator), constraint_(constraint) {
  const int n = static_cast<int>(mu_.size());
  if (n < 1) throw ShapeError("ResModel: dimension must be >= 1");
  if (sigma.rows() != n || sigma.cols() != n) throw ShapeError("ResModel: mu and sigma disagree");
  if (generator_.dim() != n) throw ShapeError("ResModel: generator dimension differs from mu");
  if (!mu_.allFinite()) throw ModelError("ResModel: mu has non-finite entries");
  sigma_ = unpack_shape(pack_shape(normalize_scatter(sigma, constraint)), n, constraint);
  Eigen::LLT<Matrix> llt(sigma_);
  chol_ = llt.matrixL();
  log_det_ = 2.0 * chol_.diagonal().array().log().sum();
  sigma_inv_ = symmetrize(llt.solve(Matrix::Identity(n, n)));
}

double ResModel::mahalanobis(const Eigen::Ref<const Vector>& x) const {
  if (x.size() != mu_.size()) throw ShapeError("mahalanobis: dimension mismatch");
  const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mu_);
  return z.squaredNorm();
}

double ResModel::logpdf(const Eigen::Ref<const Vector>& x) const {
  return -0.5 * log_det_ + generator_.logg(mahalanobis(x));
}

std::string ResModel::describe() const {
  std::ostringstream os;
  os << "N=" << dim() << ";mu=";
  for (Eigen::Index i = 0; i < mu_.size(); ++i) os << (i ? "," : "") << format_double(mu_(i));
  os << ";sigma=";
  for (Eigen::Index i = 0; i < sigma_.rows(); ++i) {
    for (Eigen::Index j = 0; j < sigma_.cols(); ++j) {
      os << ((i || j) ? "," : "") << format_double(sigma_(i, j));
    }
  }
  os << ";generator=" << generator_.describe() << ";constraint=" << to_string(constraint_);
  return os.str();
}

std::uint64_t ResModel::fingerprint() const { return fnv1a64(describe()); }

double res_logpdf(const Eigen::Ref<const Vector>& x, const ResModel& model) {
  return model.logpdf(x);
}

double mahalanobis(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& mu,
                   const Matrix& sigma) {
  if (x.size() != mu.size() || sigma.rows() != x.size() || sigma.cols() != x.size()) {
    throw ShapeError("mahalanobis: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(symmetrize(sigma));
  if (llt.info() != Eigen::Success) throw ModelError("mahalanobis: scatter is not SPD");
  const Vector r = x - mu;
  return std::max(0.0, r.dot(llt.solve(r)));
}

Vector pack_params(const ResModel& model) {
  const int n = model.dim();
  Vector theta(n_params(n));
  theta.head(n) = model.mu();
  theta.tail(n_shape_params(n)) = pack_shape(model.sigma());
  return theta;
}

std::pair<Vector, Matrix> unpack_params(const Eigen::Ref<const Vector>& theta, int dim,
                                        Constraint constraint) {
  if (theta.size() != n_params(dim)) throw ShapeError("unpack_params: wrong parameter count");
  Vector mu = theta.head(dim);
  Matrix sigma = unpack_shape(theta.tail(n_shape_params(dim)), dim, constraint);
  return {std::move(mu), std::move(sigma)};
}

std::vector<Matrix> shape_directions(const Matrix& sigma, Constraint constraint) {
  const int n = static_cast<int>(sigma.rows());
  const int last = n - 1;
  const auto coords = shape_coordinates(n);
  Matrix sigma_inv;
  if (constraint == Constraint::Det1) {
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw ModelError("shape_directions: scatter not SPD");
    sigma_inv = llt.solve(Matrix::Identity(n, n));
  }
  std::vector<Matrix> out;
  out.reserve(coords.size());
  for (const auto& [i, j] : coords) {
    Matrix d = Matrix::Zero(n, n);
    d(i, j) = 1.0;
    d(j, i) = 1.0;
    double correction = 0.0;
    if (constraint == Constraint::TraceN) {
      correction = -d.trace();
    } else {
      correction = -(sigma_inv.cwiseProduct(d)).sum() / sigma_inv(last, last);
    }
    d(last, last) += correction;
    out.push_back(std::move(d));
  }
  return out;
}

InterestSet parse_interest(const std::string& s) {
  if (s == "mu") return InterestSet::Mu;
  if (s == "shape") return InterestSet::Shape;
  if (s == "mu+shape") return InterestSet::MuShape;
  throw ConfigError("unknown interest set '" + s + "' (expected mu, shape or mu+shape)");
}

std::string to_string(InterestSet s) {
  switch (s) {
    case InterestSet::Mu:
      return "mu";
    case InterestSet::Shape:
      return "shape";
    case InterestSet::MuShape:
      return "mu+shape";
  }
  return "?";
}

ParamPartition ParamPartition::from_indices(std::vector<int> interest, std::vector<int> nuisance,
                                            int total) {
  if (interest.empty()) throw ModelError("partition: at least one interest parameter required");
  std::set<int> seen;
  for (int i : interest) {
    if (i < 0 || i >= total || !seen.insert(i).second) {
      throw ModelError("partition: invalid or repeated interest index");
    }
  }
  for (int i : nuisance) {
    if (i < 0 || i >= total || !seen.insert(i).second) {
      throw ModelError("partition: nuisance index invalid or overlapping interest");
    }
  }
  if (static_cast<int>(seen.size()) != total) {
    throw ModelError("partition: interest and nuisance must cover every parameter");
  }
  return ParamPartition{std::move(interest), std::move(nuisance)};
}

ParamPartition ParamPartition::make(int dim, InterestSet interest) {
  std::vector<int> mu_idx(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) mu_idx[static_cast<std::size_t>(i)] = i;
  std::vector<int> shape_idx;
  for (int i = dim; i < n_params(dim); ++i) shape_idx.push_back(i);
  switch (interest) {
    case InterestSet::Mu:
      return from_indices(mu_idx, shape_idx, n_params(dim));
    case InterestSet::Shape:
      return from_indices(shape_idx, mu_idx, n_params(dim));
    case InterestSet::MuShape: {
      std::vector<int> all = mu_idx;
      all.insert(all.end(), shape_idx.begin(), shape_idx.end());
      return from_indices(all, {}, n_params(dim));
    }
  }
  throw ModelError("partition: unknown interest set");
}

}  // namespace resbound
