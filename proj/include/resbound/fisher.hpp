#pragma once

#include <cstdint>
#include <iosfwd>

#include "resbound/csv.hpp"
#include "resbound/hilbert.hpp"
#include "resbound/model.hpp"
#include "resbound/sampling.hpp"

namespace resbound {

/// Stacked score s_theta evaluated on a batch, rows in packed-parameter order.
struct ScoreSample {
  FunctionSample full;
  ParamPartition partition;

  FunctionSample interest() const { return full.rows(partition.interest_idx); }
  FunctionSample nuisance() const { return full.rows(partition.nuisance_idx); }
};

/// Gradient of log p(x | theta) in packed coordinates at a single point.
Vector score_point_analytic(const ResModel& model, const Eigen::Ref<const Vector>& x);

/// Central differences of the log-density in packed coordinates; the
/// perturbed parameters are mapped back onto the constraint surface.
Vector score_point_fd(const ResModel& model, const Eigen::Ref<const Vector>& x, double step);

/// Uncentered d x M score evaluations (analytic). Throws ScoreError with the
/// offending sample index when a score is not finite.
Matrix score_values_analytic(const ResModel& model, const SampleBatch& batch);
Matrix score_values_fd(const ResModel& model, const SampleBatch& batch, double step);

ScoreSample score_analytic(const ResModel& model, const SampleBatch& batch,
                           const ParamPartition& partition);
ScoreSample score_fd(const ResModel& model, const SampleBatch& batch,
                     const ParamPartition& partition, double step);

/// I(theta) = E_0{s s^T}, in packed-parameter order.
Matrix fim_mc(const ScoreSample& scores);

struct FimBlocks {
  Matrix interest;     // C_0(s_gamma)
  Matrix cross;        // I_{gamma eta}
  Matrix nuisance;     // C_0(s_eta)
};

FimBlocks fim_blocks(const Matrix& fim, const ParamPartition& partition);

/// Inverse Schur complement (I_gg - I_ge I_ee^{-1} I_ge^T)^{-1}.
/// Throws SingularFim when the nuisance block or the complement is singular.
Matrix crb_schur(const Matrix& fim, const ParamPartition& partition);

struct EfficientScore {
  FunctionSample score;
  /// Some interest direction lost all information to the nuisance span.
  bool degenerate = false;
  /// sqrt(lambda_min(C_0(s*)) / lambda_max(C_0(s_gamma))).
  double relative_norm = 1.0;
};

/// Relative norm below which an efficient score is declared degenerate.
inline constexpr double kDegenerateNorm = 1e-8;

EfficientScore efficient_score(const ScoreSample& scores, const SpanPolicy& policy = {});

/// C_0(s*).
Matrix efficient_fim(const ScoreSample& scores, const SpanPolicy& policy = {});

/// Inverse of an efficient information matrix. Throws NonIdentifiable when
/// the efficient score is degenerate.
Matrix invert_efficient_fim(const EfficientScore& eff);

enum class Route { Schur, Projection };
std::string to_string(Route r);

struct BoundResult {
  Matrix fim;
  Matrix efficient_fim;
  Matrix crb_schur;
  Matrix crb_projection;
  /// Authoritative bound (projection route).
  Matrix crb;
  Route route = Route::Projection;
  ParamPartition partition;
  /// ||crb_projection - crb_schur||_F / ||crb_schur||_F.
  double route_agreement = 0.0;
  double fim_condition = 1.0;
  double nuisance_condition = 1.0;
  double efficient_condition = 1.0;
  Eigen::Index m = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_fingerprint = 0;
};

/// Classical CRB of the interest block through both routes on one batch.
BoundResult compute_crb(const ResModel& model, const SampleBatch& batch,
                        const ParamPartition& partition);

/// Long-format matrix dump: block,row,col,value.
void write_bound_csv(std::ostream& os, const BoundResult& result, const Metadata& extra = {});

}  // namespace resbound
