#include "resbound/fisher.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "resbound/errors.hpp"
#include "resbound/parallel.hpp"

namespace resbound {

namespace {

struct ShapeTerms {
  std::vector<Matrix> directions;
  Vector trace_term;  // -1/2 tr(Sigma^{-1} D_k)
};

ShapeTerms shape_terms(const ResModel& model) {
  ShapeTerms out;
  out.directions = shape_directions(model.sigma(), model.constraint());
  out.trace_term.resize(static_cast<Eigen::Index>(out.directions.size()));
  for (std::size_t k = 0; k < out.directions.size(); ++k) {
    out.trace_term(static_cast<Eigen::Index>(k)) =
        -0.5 * model.sigma_inv().cwiseProduct(out.directions[k]).sum();
  }
  return out;
}

void fill_score(const ResModel& model, const ShapeTerms& terms, const Eigen::Ref<const Vector>& x,
                Eigen::Ref<Vector> out) {
  const int n = model.dim();
  const Vector w = model.sigma_inv() * (x - model.mu());
  const double t = std::max(0.0, (x - model.mu()).dot(w));
  const double psi = model.generator().psi(t);
  out.head(n) = -2.0 * psi * w;
  for (std::size_t k = 0; k < terms.directions.size(); ++k) {
    out(n + static_cast<Eigen::Index>(k)) =
        terms.trace_term(static_cast<Eigen::Index>(k)) - psi * w.dot(terms.directions[k] * w);
  }
}

// Log-density evaluator for a parameter point away from the model itself.
struct PerturbedDensity {
  Vector mu;
  Matrix chol;
  double half_log_det;

  double logpdf(const DensityGenerator& g, const Eigen::Ref<const Vector>& x) const {
    const Vector z = chol.triangularView<Eigen::Lower>().solve(x - mu);
    return -half_log_det + g.logg(z.squaredNorm());
  }
};

PerturbedDensity make_perturbed(const Vector& theta, int n, Constraint c) {
  auto [mu, sigma] = unpack_params(theta, n, c);
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() != Eigen::Success) throw ScoreError("score_fd: constraint projection failed");
  PerturbedDensity p{std::move(mu), llt.matrixL(), 0.0};
  p.half_log_det = p.chol.diagonal().array().log().sum();
  return p;
}

std::vector<PerturbedDensity> perturbations(const ResModel& model, double step) {
  if (!(step > 0.0)) throw ScoreError("score_fd: step must be positive");
  const Vector theta = pack_params(model);
  std::vector<PerturbedDensity> out;
  out.reserve(static_cast<std::size_t>(2 * theta.size()));
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Vector plus = theta;
    Vector minus = theta;
    plus(k) += step;
    minus(k) -= step;
    try {
      out.push_back(make_perturbed(plus, model.dim(), model.constraint()));
      out.push_back(make_perturbed(minus, model.dim(), model.constraint()));
    } catch (const ModelError& e) {
      throw ScoreError(std::string("score_fd: constraint projection failed: ") + e.what());
    }
  }
  return out;
}

template <typename Fn>
Matrix evaluate_batch(const ResModel& model, const SampleBatch& batch, Fn&& fn) {
  require_same_model(model, batch);
  const Eigen::Index m = batch.size();
  const int d = n_params(model.dim());
  Matrix values(d, m);
  const auto n_chunks = static_cast<std::size_t>((m + kReductionChunk - 1) / kReductionChunk);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kReductionChunk;
    const Eigen::Index end = std::min(m, begin + kReductionChunk);
    Vector x(model.dim());
    for (Eigen::Index i = begin; i < end; ++i) {
      x = batch.data.row(i).transpose();
      fn(x, values.col(i));
      if (!values.col(i).allFinite()) {
        throw ScoreError("non-finite score at sample " + std::to_string(i), i);
      }
    }
  });
  return values;
}

}  // namespace

Vector score_point_analytic(const ResModel& model, const Eigen::Ref<const Vector>& x) {
  if (x.size() != model.dim()) throw ShapeError("score: dimension mismatch");
  Vector out(n_params(model.dim()));
  fill_score(model, shape_terms(model), x, out);
  return out;
}

Vector score_point_fd(const ResModel& model, const Eigen::Ref<const Vector>& x, double step) {
  if (x.size() != model.dim()) throw ShapeError("score: dimension mismatch");
  const auto pert = perturbations(model, step);
  Vector out(n_params(model.dim()));
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    const auto& plus = pert[static_cast<std::size_t>(2 * k)];
    const auto& minus = pert[static_cast<std::size_t>(2 * k + 1)];
    out(k) = (plus.logpdf(model.generator(), x) - minus.logpdf(model.generator(), x)) / (2.0 * step);
  }
  return out;
}

Matrix score_values_analytic(const ResModel& model, const SampleBatch& batch) {
  const ShapeTerms terms = shape_terms(model);
  return evaluate_batch(model, batch, [&](const Vector& x, Eigen::Ref<Vector> col) {
    fill_score(model, terms, x, col);
  });
}

Matrix score_values_fd(const ResModel& model, const SampleBatch& batch, double step) {
  const auto pert = perturbations(model, step);
  const auto& g = model.generator();
  return evaluate_batch(model, batch, [&](const Vector& x, Eigen::Ref<Vector> col) {
    for (Eigen::Index k = 0; k < col.size(); ++k) {
      col(k) = (pert[static_cast<std::size_t>(2 * k)].logpdf(g, x) -
                pert[static_cast<std::size_t>(2 * k + 1)].logpdf(g, x)) /
               (2.0 * step);
    }
  });
}

ScoreSample score_analytic(const ResModel& model, const SampleBatch& batch,
                           const ParamPartition& partition) {
  if (partition.d() != n_params(model.dim())) throw ShapeError("partition size differs from model");
  return ScoreSample{FunctionSample(score_values_analytic(model, batch), batch.batch_id()), partition};
}

ScoreSample score_fd(const ResModel& model, const SampleBatch& batch, const ParamPartition& partition,
                     double step) {
  if (partition.d() != n_params(model.dim())) throw ShapeError("partition size differs from model");
  return ScoreSample{FunctionSample(score_values_fd(model, batch, step), batch.batch_id()), partition};
}

Matrix fim_mc(const ScoreSample& scores) { return cov0(scores.full); }

namespace {

Matrix select(const Matrix& a, const std::vector<int>& rows, const std::vector<int>& cols) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(rows[i], cols[j]);
    }
  }
  return out;
}

}  // namespace

FimBlocks fim_blocks(const Matrix& fim, const ParamPartition& partition) {
  if (fim.rows() != partition.d() || fim.cols() != partition.d()) {
    throw ShapeError("fim_blocks: FIM size differs from partition");
  }
  return FimBlocks{select(fim, partition.interest_idx, partition.interest_idx),
                   select(fim, partition.interest_idx, partition.nuisance_idx),
                   select(fim, partition.nuisance_idx, partition.nuisance_idx)};
}

Matrix crb_schur(const Matrix& fim, const ParamPartition& partition) {
  const FimBlocks b = fim_blocks(fim, partition);
  if (partition.r() == 0) return inverse_spd(b.interest);
  Matrix nuisance_inv;
  try {
    nuisance_inv = inverse_spd(b.nuisance);
  } catch (const SingularFim& e) {
    throw SingularFim(std::string("nuisance block: ") + e.what());
  }
  const Matrix complement = symmetrize(b.interest - b.cross * nuisance_inv * b.cross.transpose());
  try {
    return inverse_spd(complement);
  } catch (const SingularFim& e) {
    throw SingularFim(std::string("Schur complement: ") + e.what());
  }
}

EfficientScore efficient_score(const ScoreSample& scores, const SpanPolicy& policy) {
  const FunctionSample s_gamma = scores.interest();
  EfficientScore out{s_gamma, false, 1.0};
  if (scores.partition.r() > 0) {
    out.score = residual(s_gamma, SpanBasis(scores.nuisance(), policy));
  }
  const double top = max_eigenvalue(cov0(s_gamma));
  const double low = min_eigenvalue(cov0(out.score));
  out.relative_norm = top > 0.0 ? std::sqrt(std::max(0.0, low) / top) : 0.0;
  out.degenerate = out.relative_norm < kDegenerateNorm;
  return out;
}

Matrix efficient_fim(const ScoreSample& scores, const SpanPolicy& policy) {
  return cov0(efficient_score(scores, policy).score);
}

Matrix invert_efficient_fim(const EfficientScore& eff) {
  if (eff.degenerate) {
    throw NonIdentifiable("efficient score is degenerate (relative norm " +
                          format_double(eff.relative_norm) + ")");
  }
  return inverse_spd(cov0(eff.score), 0.0);
}

std::string to_string(Route r) { return r == Route::Schur ? "schur" : "projection"; }

BoundResult compute_crb(const ResModel& model, const SampleBatch& batch,
                        const ParamPartition& partition) {
  const ScoreSample scores = score_analytic(model, batch, partition);
  BoundResult out;
  out.partition = partition;
  out.m = batch.size();
  out.seed = batch.seed;
  out.model_fingerprint = batch.model_fingerprint;
  out.fim = fim_mc(scores);
  out.fim_condition = condition_number(out.fim);
  out.nuisance_condition = condition_number(fim_blocks(out.fim, partition).nuisance);
  out.crb_schur = crb_schur(out.fim, partition);
  const EfficientScore eff = efficient_score(scores);
  out.efficient_fim = cov0(eff.score);
  out.efficient_condition = condition_number(out.efficient_fim);
  out.crb_projection = invert_efficient_fim(eff);
  out.crb = out.crb_projection;
  out.route = Route::Projection;
  out.route_agreement = rel_frobenius(out.crb_projection, out.crb_schur);
  return out;
}

void write_bound_csv(std::ostream& os, const BoundResult& r, const Metadata& extra) {
  Metadata meta{{"version", std::string("resbound ") + kVersion},
                {"fingerprint", to_hex(r.model_fingerprint)},
                {"M", std::to_string(r.m)},
                {"seed", std::to_string(r.seed)},
                {"route", to_string(r.route)},
                {"q", std::to_string(r.partition.q())},
                {"r", std::to_string(r.partition.r())},
                {"route_agreement", format_double(r.route_agreement)},
                {"fim_condition", format_double(r.fim_condition)},
                {"nuisance_condition", format_double(r.nuisance_condition)},
                {"efficient_condition", format_double(r.efficient_condition)}};
  meta.insert(meta.end(), extra.begin(), extra.end());
  write_metadata(os, meta);
  os << "block,row,col,value\n";
  auto dump = [&os](const char* name, const Matrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        os << name << ',' << i << ',' << j << ',' << format_double(a(i, j)) << '\n';
      }
    }
  };
  dump("fim", r.fim);
  dump("efficient_fim", r.efficient_fim);
  dump("crb_schur", r.crb_schur);
  dump("crb_projection", r.crb_projection);
}

}  // namespace resbound
