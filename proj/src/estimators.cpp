#include "resbound/estimators.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "resbound/errors.hpp"
#include "resbound/parallel.hpp"
#include "resbound/rng.hpp"
#include "resbound/sampling.hpp"

namespace resbound {

namespace {

void require_enough(const Matrix& data) {
  if (data.rows() <= data.cols()) {
    throw EstimatorError("need more observations than dimensions (M > N)");
  }
  if (!data.allFinite()) throw EstimatorError("data has non-finite entries");
}

Matrix to_shape(const Matrix& scatter, Constraint c) {
  const int n = static_cast<int>(scatter.rows());
  try {
    return unpack_shape(pack_shape(normalize_scatter(scatter, c)), n, c);
  } catch (const ModelError& e) {
    throw EstimatorError(std::string("scatter estimate is degenerate: ") + e.what());
  }
}

// t_m = r_m^T S^{-1} r_m for every row.
Vector quad_forms(const Matrix& centered, const Matrix& scatter) {
  Eigen::LLT<Matrix> llt(scatter);
  if (llt.info() != Eigen::Success) throw EstimatorError("scatter iterate lost positive definiteness");
  const Matrix z = llt.matrixL().solve(centered.transpose());
  return z.colwise().squaredNorm().transpose();
}

Matrix weighted_scatter(const Matrix& centered, const Vector& w, double denom) {
  const Matrix scaled = centered.array().colwise() * w.array();
  return symmetrize(centered.transpose() * scaled / denom);
}

}  // namespace

Vector coordinate_median(const Matrix& data) {
  Vector med(data.cols());
  std::vector<double> col(static_cast<std::size_t>(data.rows()));
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    for (Eigen::Index i = 0; i < data.rows(); ++i) col[static_cast<std::size_t>(i)] = data(i, j);
    std::sort(col.begin(), col.end());
    const std::size_t n = col.size();
    med(j) = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
  }
  return med;
}

LocationScatter sample_moments(const Matrix& data, Constraint constraint) {
  require_enough(data);
  const auto m = static_cast<double>(data.rows());
  LocationScatter out;
  out.location = data.colwise().mean().transpose();
  const Matrix centered = data.rowwise() - out.location.transpose();
  const Matrix cov = symmetrize(centered.transpose() * centered / (m - 1.0));
  const double top = max_eigenvalue(cov);
  if (!(top > 0.0) || min_eigenvalue(cov) <= 1e-12 * top) {
    throw EstimatorError("sample covariance is rank deficient");
  }
  out.scatter = to_shape(cov, constraint);
  return out;
}

LocationScatter tyler(const Matrix& data, const std::optional<Vector>& center, Constraint constraint,
                      const FixedPointOptions& options) {
  require_enough(data);
  const Eigen::Index n = data.cols();
  if (center && center->size() != n) throw ShapeError("tyler: center has wrong dimension");
  LocationScatter out;
  out.location = center ? *center : coordinate_median(data);
  out.scatter = to_shape(Matrix::Identity(n, n), constraint);
  for (int it = 1; it <= options.max_iter; ++it) {
    const Matrix centered = data.rowwise() - out.location.transpose();
    const Vector t = quad_forms(centered, out.scatter);
    Vector w(t.size());
    int excluded = 0;
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      if (t(i) > 0.0) {
        w(i) = 1.0 / t(i);
      } else {
        w(i) = 0.0;
        ++excluded;
      }
    }
    const double used = static_cast<double>(t.size() - excluded);
    if (used <= static_cast<double>(n)) throw EstimatorError("tyler: too few points away from the center");
    const Matrix next = to_shape(weighted_scatter(centered, w, used / static_cast<double>(n)), constraint);
    double change = rel_frobenius(next, out.scatter);
    if (!center) {
      const Vector root_w = w.cwiseSqrt();
      const Vector loc = (data.transpose() * root_w) / root_w.sum();
      const double scale = std::sqrt(out.scatter.trace() / static_cast<double>(n));
      change = std::max(change, (loc - out.location).norm() / scale);
      out.location = loc;
    }
    out.scatter = next;
    out.iterations = it;
    out.residual = change;
    out.excluded = excluded;
    if (change <= options.tol) return out;
  }
  throw NonConvergence("tyler: no convergence in " + std::to_string(options.max_iter) +
                           " iterations (residual " + format_double(out.residual) + ")",
                       out.residual);
}

namespace {

template <typename Weights>
LocationScatter joint_fixed_point(const Matrix& data, Constraint constraint,
                                  const FixedPointOptions& options, const char* name,
                                  Weights&& weights) {
  require_enough(data);
  const Eigen::Index n = data.cols();
  const auto m = static_cast<double>(data.rows());
  Vector loc = coordinate_median(data);
  Matrix scatter = Matrix::Identity(n, n);
  double change = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= options.max_iter; ++it) {
    const Matrix centered = data.rowwise() - loc.transpose();
    const Vector t = quad_forms(centered, scatter);
    Vector w_loc(t.size());
    Vector w_scatter(t.size());
    weights(t, w_loc, w_scatter);
    const Vector next_loc = (data.transpose() * w_loc) / w_loc.sum();
    const Matrix recentered = data.rowwise() - next_loc.transpose();
    const Matrix next = weighted_scatter(recentered, w_scatter, m);
    const double scale = std::sqrt(scatter.trace() / static_cast<double>(n));
    change = std::max(rel_frobenius(next, scatter), (next_loc - loc).norm() / scale);
    loc = next_loc;
    scatter = next;
    if (change <= options.tol) {
      LocationScatter out;
      out.location = loc;
      out.scatter = to_shape(scatter, constraint);
      out.iterations = it;
      out.residual = change;
      return out;
    }
  }
  throw NonConvergence(std::string(name) + ": no convergence in " + std::to_string(options.max_iter) +
                           " iterations (residual " + format_double(change) + ")",
                       change);
}

}  // namespace

LocationScatter huber_m(const Matrix& data, double q01, Constraint constraint,
                        const FixedPointOptions& options) {
  if (!(q01 > 0.0 && q01 <= 1.0)) throw EstimatorError("huber: q01 must lie in (0, 1]");
  const auto n = static_cast<double>(data.cols());
  double c2 = std::numeric_limits<double>::infinity();
  double beta = 1.0;
  if (q01 < 1.0) {
    const boost::math::chi_squared_distribution<double> chi_n(n);
    const boost::math::chi_squared_distribution<double> chi_n2(n + 2.0);
    c2 = boost::math::quantile(chi_n, q01);
    beta = boost::math::cdf(chi_n2, c2) + (c2 / n) * (1.0 - boost::math::cdf(chi_n, c2));
  }
  const double c = std::sqrt(c2);
  return joint_fixed_point(data, constraint, options, "huber", [&](const Vector& t, Vector& wl, Vector& ws) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double ti = t(i);
      wl(i) = ti > c2 ? c / std::sqrt(ti) : 1.0;
      ws(i) = (ti > c2 ? c2 / ti : 1.0) / beta;
    }
  });
}

LocationScatter student_t_mle(const Matrix& data, double nu, Constraint constraint,
                              const FixedPointOptions& options) {
  if (!(nu > 0.0)) throw EstimatorError("student_t_mle: nu must be positive");
  const auto n = static_cast<double>(data.cols());
  return joint_fixed_point(data, constraint, options, "student_t_mle", [&](const Vector& t, Vector& wl, Vector& ws) {
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      const double w = std::isinf(nu) ? 1.0 : (n + nu) / (nu + t(i));
      wl(i) = w;
      ws(i) = w;
    }
  });
}

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::SampleMoments:
      return "sample_moments";
    case EstimatorId::Tyler:
      return "tyler";
    case EstimatorId::Huber:
      return "huber";
    case EstimatorId::StudentTMle:
      return "student_t_mle";
  }
  return "?";
}

EstimatorId parse_estimator(const std::string& s) {
  for (auto id : {EstimatorId::SampleMoments, EstimatorId::Tyler, EstimatorId::Huber,
                  EstimatorId::StudentTMle}) {
    if (s == to_string(id)) return id;
  }
  throw ConfigError("unknown estimator '" + s + "'");
}

LocationScatter run_estimator(const EstimatorSpec& spec, const Matrix& data, const ResModel& truth) {
  switch (spec.id) {
    case EstimatorId::SampleMoments:
      return sample_moments(data, truth.constraint());
    case EstimatorId::Tyler:
      return tyler(data, spec.tyler_known_center ? std::optional<Vector>(truth.mu()) : std::nullopt,
                   truth.constraint(), spec.options);
    case EstimatorId::Huber:
      return huber_m(data, spec.huber_q, truth.constraint(), spec.options);
    case EstimatorId::StudentTMle:
      return student_t_mle(data, spec.student_nu, truth.constraint(), spec.options);
  }
  throw EstimatorError("unknown estimator");
}

namespace {

Matrix error_covariance(const Matrix& errors) {
  const Vector mean = errors.colwise().mean().transpose();
  const Matrix centered = errors.rowwise() - mean.transpose();
  return symmetrize(centered.transpose() * centered / static_cast<double>(errors.rows() - 1));
}

double slack(const Matrix& errors, Eigen::Index m, const Matrix& bound) {
  return min_eigenvalue(static_cast<double>(m) * error_covariance(errors) - bound);
}

}  // namespace

double bootstrap_slack_se(const Matrix& errors, Eigen::Index m, const Matrix& bound,
                          std::uint64_t seed, int resamples) {
  const Eigen::Index r = errors.rows();
  if (r < 2 || resamples < 2) return 0.0;
  std::vector<double> values(static_cast<std::size_t>(resamples));
  Matrix resampled(r, errors.cols());
  for (int b = 0; b < resamples; ++b) {
    CounterStream rng(derive_seed(seed, "bootstrap", static_cast<std::uint64_t>(b)));
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto pick = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(r));
      resampled.row(i) = errors.row(pick);
    }
    values[static_cast<std::size_t>(b)] = slack(resampled, m, bound);
  }
  CompensatedSum s;
  for (double v : values) s.add(v);
  const double mean = s.value() / resamples;
  CompensatedSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  return std::sqrt(ss.value() / (resamples - 1));
}

std::vector<EstimatorReport> benchmark(const ResModel& model, const ParamPartition& partition,
                                       const std::vector<EstimatorSpec>& estimators, int r,
                                       Eigen::Index m, std::uint64_t seed,
                                       const BenchmarkBounds& bounds) {
  if (r < 2) throw EstimatorError("benchmark needs R >= 2 trials");
  if (partition.d() != n_params(model.dim())) throw ShapeError("benchmark: partition differs from model");
  const int q = partition.q();
  if (bounds.crb.rows() != q || bounds.scrb.rows() != q) {
    throw ShapeError("benchmark: bounds do not match the interest dimension");
  }
  const Vector truth = pack_params(model);
  const std::size_t n_est = estimators.size();
  // errors[e][trial], empty optional on failure
  std::vector<std::vector<std::optional<Vector>>> errors(n_est, std::vector<std::optional<Vector>>(static_cast<std::size_t>(r)));
  std::vector<std::vector<int>> iterations(n_est, std::vector<int>(static_cast<std::size_t>(r), 0));
  parallel_for(static_cast<std::size_t>(r), [&](std::size_t trial) {
    const SampleBatch batch = sample_res(model, m, derive_seed(seed, "trial", trial));
    for (std::size_t e = 0; e < n_est; ++e) {
      try {
        const LocationScatter est = run_estimator(estimators[e], batch.data, model);
        Vector theta(truth.size());
        theta.head(model.dim()) = est.location;
        theta.tail(n_shape_params(model.dim())) = pack_shape(est.scatter);
        Vector err(q);
        for (int i = 0; i < q; ++i) {
          const int idx = partition.interest_idx[static_cast<std::size_t>(i)];
          err(i) = theta(idx) - truth(idx);
        }
        errors[e][trial] = err;
        iterations[e][trial] = est.iterations;
      } catch (const EstimatorError&) {
        errors[e][trial].reset();
      }
    }
  });

  std::vector<EstimatorReport> out;
  for (std::size_t e = 0; e < n_est; ++e) {
    EstimatorReport rep;
    rep.estimator = to_string(estimators[e].id);
    rep.trials = r;
    rep.m = m;
    int ok = 0;
    CompensatedSum iters;
    for (int t = 0; t < r; ++t) {
      if (errors[e][static_cast<std::size_t>(t)]) {
        ++ok;
        iters.add(iterations[e][static_cast<std::size_t>(t)]);
      }
    }
    rep.failures = r - ok;
    rep.errors.resize(ok, q);
    int row = 0;
    for (int t = 0; t < r; ++t) {
      if (errors[e][static_cast<std::size_t>(t)]) {
        rep.errors.row(row++) = errors[e][static_cast<std::size_t>(t)]->transpose();
        rep.trial_index.push_back(t);
      }
    }
    rep.valid = rep.failures <= kMaxFailureRate * r && ok >= 2;
    if (ok > 0) rep.mean_iterations = iters.value() / ok;
    // a known-center Tyler run has no location error to compare
    const bool skip_mu = estimators[e].id == EstimatorId::Tyler && estimators[e].tyler_known_center;
    for (int i = 0; i < q; ++i) {
      if (!(skip_mu && partition.interest_idx[static_cast<std::size_t>(i)] < model.dim())) {
        rep.compared.push_back(i);
      }
    }
    if (ok >= 2) {
      rep.bias = rep.errors.colwise().mean().transpose();
      rep.error_cov = error_covariance(rep.errors);
      if (rep.compared.empty()) {
        rep.slack_crb = rep.slack_scrb = std::numeric_limits<double>::quiet_NaN();
      } else {
        const Matrix sub = rep.errors(Eigen::all, rep.compared);
        const Matrix crb = bounds.crb(rep.compared, rep.compared);
        const Matrix scrb = bounds.scrb(rep.compared, rep.compared);
        rep.slack_crb = slack(sub, m, crb);
        rep.slack_scrb = slack(sub, m, scrb);
        const std::uint64_t bseed = derive_seed(seed, "bootstrap-" + rep.estimator);
        rep.slack_crb_se = bootstrap_slack_se(sub, m, crb, bseed);
        rep.slack_scrb_se = bootstrap_slack_se(sub, m, scrb, bseed);
      }
    } else {
      rep.bias = Vector::Constant(q, std::numeric_limits<double>::quiet_NaN());
      rep.error_cov = Matrix::Constant(q, q, std::numeric_limits<double>::quiet_NaN());
      rep.slack_crb = rep.slack_scrb = std::numeric_limits<double>::quiet_NaN();
    }
    out.push_back(std::move(rep));
  }
  return out;
}

void write_report_csv(std::ostream& os, const std::vector<EstimatorReport>& reports, const Metadata& meta) {
  Metadata all{{"version", std::string("resbound ") + kVersion}};
  all.insert(all.end(), meta.begin(), meta.end());
  write_metadata(os, all);
  os << "estimator,R,M,failures,valid,mean_iterations,slack_crb,slack_crb_se,slack_scrb,slack_scrb_se,"
        "trace_m_error_cov,bias_norm,compared\n";
  for (const auto& r : reports) {
    os << r.estimator << ',' << r.trials << ',' << r.m << ',' << r.failures << ','
       << (r.valid ? "true" : "false") << ',' << format_double(r.mean_iterations) << ','
       << format_double(r.slack_crb) << ',' << format_double(r.slack_crb_se) << ','
       << format_double(r.slack_scrb) << ',' << format_double(r.slack_scrb_se) << ','
       << format_double(static_cast<double>(r.m) * r.error_cov.trace()) << ','
       << format_double(r.bias.norm()) << ',';
    for (std::size_t i = 0; i < r.compared.size(); ++i) os << (i ? " " : "") << r.compared[i];
    os << '\n';
  }
}

void write_trials_csv(std::ostream& os, const std::vector<EstimatorReport>& reports, const Metadata& meta) {
  Metadata all{{"version", std::string("resbound ") + kVersion}};
  all.insert(all.end(), meta.begin(), meta.end());
  write_metadata(os, all);
  os << "estimator,trial,coord,error\n";
  for (const auto& r : reports) {
    for (Eigen::Index i = 0; i < r.errors.rows(); ++i) {
      for (Eigen::Index j = 0; j < r.errors.cols(); ++j) {
        os << r.estimator << ',' << r.trial_index[static_cast<std::size_t>(i)] << ',' << j << ','
           << format_double(r.errors(i, j)) << '\n';
      }
    }
  }
}

}  // namespace resbound
