#include "resbound/semiparam.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>

#include "resbound/errors.hpp"

namespace resbound {

namespace {

// Relative eigenvalue cutoff for the equilibrated submodel nuisance block.
constexpr double kSubmodelCutoff = 1e-12;

}  // namespace

std::string to_string(TiltFamily f) {
  switch (f) {
    case TiltFamily::PolyLogT:
      return "polylog";
    case TiltFamily::BSplineQuantile:
      return "bspline";
    case TiltFamily::Custom:
      return "custom";
  }
  return "?";
}

TiltFamily parse_family(const std::string& s) {
  if (s == "polylog") return TiltFamily::PolyLogT;
  if (s == "bspline") return TiltFamily::BSplineQuantile;
  throw ConfigError("unknown sieve family '" + s + "' (expected polylog or bspline)");
}

namespace {

double log_transform(double t) {
  const double u = std::log1p(t);
  return 2.0 * u / (1.0 + u) - 1.0;
}

// Three-term recurrence of polynomials in w orthonormal under the base law,
//   sqrt(beta[j+1]) p_{j+1} = (w - alpha[j]) p_j - sqrt(beta[j]) p_{j-1},
// obtained by the Stieltjes procedure on a midpoint grid in probability.
// Each p_j is then divided by its maximum modulus on [-1, 1] so that tilts stay
// bounded by |eta|.
struct OrthoPoly {
  std::vector<double> alpha;
  std::vector<double> beta;  // beta[0] unused
  std::vector<double> scale;

  double eval(double w, int degree) const { return raw(w, degree) * scale[static_cast<std::size_t>(degree)]; }

  double raw(double w, int degree) const {
    double prev = 0.0;
    double cur = 1.0;
    for (int j = 0; j < degree; ++j) {
      const double next =
          ((w - alpha[static_cast<std::size_t>(j)]) * cur - std::sqrt(beta[static_cast<std::size_t>(j)]) * prev) /
          std::sqrt(beta[static_cast<std::size_t>(j + 1)]);
      prev = cur;
      cur = next;
    }
    return cur;
  }
};

constexpr int kStieltjesGrid = 4096;

std::shared_ptr<const OrthoPoly> ortho_poly(const DensityGenerator& g, int k) {
  std::vector<double> w(kStieltjesGrid);
  for (int i = 0; i < kStieltjesGrid; ++i) {
    w[static_cast<std::size_t>(i)] = log_transform(g.mahalanobis_quantile((i + 0.5) / kStieltjesGrid));
  }
  auto poly = std::make_shared<OrthoPoly>();
  poly->beta.push_back(0.0);
  std::vector<double> prev(w.size(), 0.0), cur(w.size(), 1.0), next(w.size());
  for (int j = 0; j < k; ++j) {
    CompensatedSum a;
    for (std::size_t i = 0; i < w.size(); ++i) a.add(w[i] * cur[i] * cur[i]);
    const double alpha = a.value() / kStieltjesGrid;
    const double sb = std::sqrt(poly->beta.back());
    CompensatedSum b;
    for (std::size_t i = 0; i < w.size(); ++i) {
      next[i] = (w[i] - alpha) * cur[i] - sb * prev[i];
      b.add(next[i] * next[i]);
    }
    const double beta = b.value() / kStieltjesGrid;
    if (!(beta > 0.0)) throw SubmodelError("polylog basis: degree " + std::to_string(j + 1) + " is degenerate");
    const double norm = std::sqrt(beta);
    for (std::size_t i = 0; i < w.size(); ++i) next[i] /= norm;
    poly->alpha.push_back(alpha);
    poly->beta.push_back(beta);
    std::swap(prev, cur);
    std::swap(cur, next);
  }
  poly->scale.assign(static_cast<std::size_t>(k + 1), 0.0);
  constexpr int kSupGrid = 4000;
  for (int i = 0; i <= kSupGrid; ++i) {
    const double x = -1.0 + 2.0 * i / kSupGrid;
    for (int j = 1; j <= k; ++j) {
      auto& sc = poly->scale[static_cast<std::size_t>(j)];
      sc = std::max(sc, std::abs(poly->raw(x, j)));
    }
  }
  for (int j = 1; j <= k; ++j) poly->scale[static_cast<std::size_t>(j)] = 1.0 / poly->scale[static_cast<std::size_t>(j)];
  return poly;
}

double hat(double v, int j, int k) { return std::max(0.0, 1.0 - std::abs(v * k - j)); }

}  // namespace

std::vector<RadialFn> tilt_basis(const DensityGenerator& g, int k, TiltFamily family) {
  if (k < 1) throw SubmodelError("tilt basis needs k >= 1");
  std::vector<RadialFn> out;
  out.reserve(static_cast<std::size_t>(k));
  const auto poly = family == TiltFamily::PolyLogT ? ortho_poly(g, k) : nullptr;
  for (int j = 1; j <= k; ++j) {
    if (family == TiltFamily::PolyLogT) {
      out.emplace_back([poly, j](double t) { return poly->eval(log_transform(t), j); });
    } else if (family == TiltFamily::BSplineQuantile) {
      out.emplace_back([g, j, k](double t) { return hat(g.radial_cdf(t), j, k); });
    } else {
      throw SubmodelError("custom tilt families need explicit basis functions");
    }
  }
  return out;
}

SubmodelSpec::SubmodelSpec(ResModel base, ParamPartition partition, std::vector<RadialFn> basis,
                           TiltFamily family)
    : base_(std::move(base)),
      partition_(std::move(partition)),
      basis_(std::move(basis)),
      family_(family) {
  if (partition_.d() != n_params(base_.dim())) {
    throw ShapeError("SubmodelSpec: partition size differs from model");
  }
}

double SubmodelSpec::tilt(double t, const Eigen::Ref<const Vector>& eta) const {
  if (eta.size() != k()) throw ShapeError("tilt: eta has wrong size");
  double s = 0.0;
  for (int j = 0; j < k(); ++j) {
    if (eta(j) != 0.0) s += eta(j) * basis_[static_cast<std::size_t>(j)](t);
  }
  return s;
}

double SubmodelSpec::log_normalizer(const Eigen::Ref<const Vector>& eta) const {
  if (eta.size() != k()) throw ShapeError("log_normalizer: eta has wrong size");
  if ((eta.array() == 0.0).all()) return 0.0;
  if (family_ == TiltFamily::BSplineQuantile) {
    // v = F_0(t) is uniform under the base and the tilt is piecewise linear in v
    const int kk = k();
    double total = 0.0;
    for (int i = 0; i < kk; ++i) {
      const double a = i == 0 ? 0.0 : eta(i - 1);
      const double b = eta(i);
      total += std::abs(b - a) < 1e-12 ? std::exp(0.5 * (a + b)) : (std::exp(b) - std::exp(a)) / (b - a);
    }
    return std::log(total / kk);
  }
  const auto& g = base_.generator();
  const int n = base_.dim();
  const double log_front = std::log(2.0) + log_sphere_factor(n);
  auto integrand = [&](double r) {
    if (r <= 0.0) return 0.0;
    const double t = r * r;
    const double lv = log_front + (n - 1) * std::log(r) + g.logg(t) + tilt(t, eta);
    return std::exp(lv);
  };
  double value = 0.0;
  double error = 0.0;
  double l1 = 0.0;
  try {
    boost::math::quadrature::exp_sinh<double> integrator;
    value = integrator.integrate(integrand, 1e-13, &error, &l1);
  } catch (const std::exception& e) {
    throw SubmodelError(std::string("tilted generator is not normalizable: ") + e.what());
  }
  if (!std::isfinite(value) || !(value > 0.0) || !(error <= 1e-8 * value)) {
    throw SubmodelError("tilted generator is not normalizable (integral " + format_double(value) +
                        ", error " + format_double(error) + ")");
  }
  return std::log(value);
}

double SubmodelSpec::logpdf(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eta) const {
  const double t = base_.mahalanobis(x);
  return base_.logpdf(x) + tilt(t, eta) - log_normalizer(eta);
}

Matrix SubmodelSpec::evaluate_basis(const Vector& t) const {
  const Eigen::Index m = t.size();
  const int kk = k();
  Matrix out(kk, m);
  if (family_ == TiltFamily::BSplineQuantile) {
    const auto& g = base_.generator();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double v = g.radial_cdf(t(i));
      for (int j = 0; j < kk; ++j) out(j, i) = hat(v, j + 1, kk);
    }
  } else {
    for (int j = 0; j < kk; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) out(j, i) = basis_[static_cast<std::size_t>(j)](t(i));
    }
  }
  return out;
}

namespace {

void check_working_ball(const SubmodelSpec& spec) {
  for (int j = 0; j < spec.k(); ++j) {
    for (double sign : {1.0, -1.0}) {
      Vector eta = Vector::Zero(spec.k());
      eta(j) = sign * kWorkingTilt;
      spec.log_normalizer(eta);
    }
  }
}

}  // namespace

SubmodelSpec build_submodel(const ResModel& base, const ParamPartition& partition, int k,
                            TiltFamily family) {
  SubmodelSpec spec(base, partition, tilt_basis(base.generator(), k, family), family);
  check_working_ball(spec);
  return spec;
}

SubmodelSpec build_submodel(const ResModel& base, const ParamPartition& partition,
                            std::vector<RadialFn> basis) {
  if (basis.empty()) throw SubmodelError("submodel needs at least one tilt direction");
  SubmodelSpec spec(base, partition, std::move(basis), TiltFamily::Custom);
  check_working_ball(spec);
  return spec;
}

FunctionSample nuisance_score_submodel(const SubmodelSpec& spec, const SampleBatch& batch) {
  require_same_model(spec.base(), batch);
  const Matrix tilts = spec.evaluate_basis(mahalanobis_all(spec.base(), batch));
  Matrix rows(spec.r_total(), batch.size());
  rows.topRows(spec.k()) = tilts;
  if (spec.r_finite() > 0) {
    const Matrix scores = score_values_analytic(spec.base(), batch);
    for (int i = 0; i < spec.r_finite(); ++i) {
      rows.row(spec.k() + i) = scores.row(spec.partition().nuisance_idx[static_cast<std::size_t>(i)]);
    }
  }
  return FunctionSample(std::move(rows), batch.batch_id());
}

FunctionSample semipar_efficient_score(const FunctionSample& s_gamma, const SpanBasis& sieve_span) {
  return residual(s_gamma, sieve_span);
}

Matrix semipar_efficient_fim(const FunctionSample& efficient_score) { return cov0(efficient_score); }

Matrix submodel_crb(const SubmodelSpec& spec, const SampleBatch& batch) {
  const ScoreSample scores = score_analytic(spec.base(), batch, spec.partition());
  const FunctionSample gamma = scores.interest();
  const FunctionSample eta = nuisance_score_submodel(spec, batch);
  const Matrix i_gg = cov0(gamma);
  const Matrix i_ge = cross0(gamma, eta);
  const Matrix i_ee = cov0(eta);
  // raw tilt bases are badly scaled; equilibrate before the pseudo-inverse
  Vector d(i_ee.rows());
  for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = i_ee(i, i) > 0.0 ? 1.0 / std::sqrt(i_ee(i, i)) : 0.0;
  const Matrix scaled = d.asDiagonal() * i_ee * d.asDiagonal();
  const Matrix inv = d.asDiagonal() * pinv_symmetric(scaled, kSubmodelCutoff) * d.asDiagonal();
  return inverse_spd(symmetrize(i_gg - i_ge * inv * i_ge.transpose()));
}

void validate_schedule(const std::vector<int>& schedule, TiltFamily family) {
  if (schedule.empty()) throw ScheduleError("sieve schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) throw ScheduleError("sieve sizes must be >= 1");
    if (i > 0 && schedule[i] <= schedule[i - 1]) {
      throw ScheduleError("sieve schedule must be strictly increasing");
    }
    if (i > 0 && family == TiltFamily::BSplineQuantile && schedule[i] % schedule[i - 1] != 0) {
      throw ScheduleError("bspline sieve is nested only when each size divides the next (" +
                          std::to_string(schedule[i - 1]) + " -> " + std::to_string(schedule[i]) + ")");
    }
  }
  if (family == TiltFamily::Custom) throw ScheduleError("custom families cannot form a schedule");
}

namespace {

// Rows orthonormal in the empirical inner product; grown by classical
// Gram-Schmidt with one re-orthogonalization pass.
class OrthonormalRows {
 public:
  explicit OrthonormalRows(Eigen::Index m) : rows_(0, m) {}

  int append(const Matrix& raw, double drop_tol) {
    int added = 0;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      Matrix v = raw.row(i);
      v.array() -= row_means(v)(0);
      const double original = std::sqrt(empirical_cross(v, v)(0, 0));
      if (!(original > 0.0)) continue;
      for (int pass = 0; pass < 2 && rows_.rows() > 0; ++pass) {
        const Matrix c = empirical_cross(rows_, v);
        v.noalias() -= c.transpose() * rows_;
      }
      const double left = std::sqrt(empirical_cross(v, v)(0, 0));
      if (left > drop_tol * original) {
        rows_.conservativeResize(rows_.rows() + 1, Eigen::NoChange);
        rows_.row(rows_.rows() - 1) = v / left;
        ++added;
      }
    }
    return added;
  }

  const Matrix& rows() const noexcept { return rows_; }

 private:
  Matrix rows_;
};

Matrix invert_information(const Matrix& info, const Matrix& interest_cov, int k) {
  const double top = max_eigenvalue(interest_cov);
  const double low = min_eigenvalue(info);
  if (!(top > 0.0) || std::sqrt(std::max(0.0, low) / top) < kDegenerateNorm) {
    throw NonIdentifiable("semiparametric efficient score degenerate at k = " + std::to_string(k));
  }
  return inverse_spd(info, 0.0);
}

void check_monotone(const Matrix& next, const Matrix& prev, double tol, int k) {
  const double scale = std::max(1.0, prev.norm());
  const double gap = min_eigenvalue(next - prev);
  if (gap < -tol * scale) {
    throw IntegrityError("sieve trace not Loewner-monotone at k = " + std::to_string(k) +
                         " (min eigenvalue of increment " + format_double(gap) + ")");
  }
}

}  // namespace

SieveTrace scrb_on_batch(const ResModel& base, const ParamPartition& partition,
                         const SampleBatch& batch, const std::vector<int>& schedule,
                         TiltFamily family, const SieveOptions& options) {
  validate_schedule(schedule, family);
  require_same_model(base, batch);
  const ScoreSample scores = score_analytic(base, batch, partition);
  const FunctionSample s_gamma = scores.interest();
  const Matrix interest_cov = cov0(s_gamma);
  const Vector t = mahalanobis_all(base, batch);
  const std::uint64_t id = batch.batch_id();

  SieveTrace trace;
  trace.family = family;
  trace.partition = partition;
  trace.m = batch.size();
  trace.seed = batch.seed;
  trace.model_fingerprint = batch.model_fingerprint;

  OrthonormalRows span(batch.size());
  const FunctionSample finite = scores.nuisance();
  span.append(finite.values(), options.drop_tol);
  auto bound_for = [&](int k) {
    const SpanBasis basis(FunctionSample(span.rows(), id));
    const FunctionSample eff = semipar_efficient_score(s_gamma, basis);
    return invert_information(semipar_efficient_fim(eff), interest_cov, k);
  };
  trace.crb_parametric = bound_for(0);

  Matrix prev = trace.crb_parametric;
  int consecutive = 0;
  for (int k : schedule) {
    const SubmodelSpec spec = build_submodel(base, partition, k, family);
    const Matrix raw = spec.evaluate_basis(t);
    span.append(raw, options.drop_tol);
    Matrix stacked(raw.rows() + finite.q(), raw.cols());
    stacked.topRows(raw.rows()) = raw;
    stacked.bottomRows(finite.q()) = finite.values();
    const Matrix gram = cov0(FunctionSample(std::move(stacked), id));
    const Vector d = gram.diagonal().cwiseMax(std::numeric_limits<double>::min()).cwiseSqrt().cwiseInverse();
    trace.gram_condition.push_back(condition_number(d.asDiagonal() * gram * d.asDiagonal()));

    const Matrix current = bound_for(k);
    check_monotone(current, prev, options.monotone_tol, k);
    const double metric = rel_frobenius(current, prev);
    consecutive = metric <= options.rtol ? consecutive + 1 : 0;
    if (consecutive >= 2) trace.converged = true;

    trace.k_schedule.push_back(k);
    trace.span_dims.push_back(static_cast<int>(span.rows().rows()));
    trace.metric.push_back(metric);
    trace.scrb_k.push_back(current);
    prev = current;
  }
  trace.final_scrb = trace.scrb_k.back();
  return trace;
}

SieveTrace scrb(const ResModel& base, const ParamPartition& partition,
                const std::vector<int>& schedule, Eigen::Index m, std::uint64_t seed,
                TiltFamily family, const SieveOptions& options) {
  validate_schedule(schedule, family);
  return scrb_on_batch(base, partition, sample_res(base, m, seed), schedule, family, options);
}

void write_trace_csv(std::ostream& os, const SieveTrace& trace, const Metadata& extra) {
  const int q = trace.partition.q();
  Metadata meta{{"version", std::string("resbound ") + kVersion},
                {"fingerprint", to_hex(trace.model_fingerprint)},
                {"M", std::to_string(trace.m)},
                {"seed", std::to_string(trace.seed)},
                {"family", to_string(trace.family)},
                {"q", std::to_string(q)},
                {"converged", trace.converged ? "true" : "false"}};
  meta.insert(meta.end(), extra.begin(), extra.end());
  write_metadata(os, meta);
  os << "k,span_dim,metric,gram_condition";
  for (int i = 0; i < q; ++i) {
    for (int j = 0; j < q; ++j) os << ",scrb_" << i << '_' << j;
  }
  os << '\n';
  auto row = [&](int k, int dim, double metric, double cond, const Matrix& s) {
    os << k << ',' << dim << ',' << format_double(metric) << ',' << format_double(cond);
    for (int i = 0; i < q; ++i) {
      for (int j = 0; j < q; ++j) os << ',' << format_double(s(i, j));
    }
    os << '\n';
  };
  row(0, trace.partition.r(), 0.0, 1.0, trace.crb_parametric);
  for (std::size_t i = 0; i < trace.k_schedule.size(); ++i) {
    row(trace.k_schedule[i], trace.span_dims[i], trace.metric[i], trace.gram_condition[i], trace.scrb_k[i]);
  }
}

}  // namespace resbound
