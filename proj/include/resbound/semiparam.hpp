#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "resbound/csv.hpp"
#include "resbound/fisher.hpp"
#include "resbound/hilbert.hpp"
#include "resbound/model.hpp"
#include "resbound/sampling.hpp"

namespace resbound {

/// Tilt direction for log g, as a function of the Mahalanobis distance t.
using RadialFn = std::function<double(double)>;

/// PolyLogT: polynomials of degree 1..k in w = 2u/(1+u) - 1, u = log(1+t),
/// orthonormal under the base law of w.
/// BSplineQuantile: linear B-splines (hats) in v = F_0(t), the base radial
/// CDF, on the uniform knot grid j/k; the hat at v = 0 is dropped since the
/// hats sum to one.
enum class TiltFamily { PolyLogT, BSplineQuantile, Custom };

std::string to_string(TiltFamily f);
TiltFamily parse_family(const std::string& s);

/// Tilt radius within which every submodel member must stay a valid density.
inline constexpr double kWorkingTilt = 0.05;

/// Parametric submodel g_eta(t) = g_0(t) exp(eta . b(t) - A(eta)) passing
/// through the base model at eta = 0, plus the finite nuisance coordinates of
/// the partition.
class SubmodelSpec {
 public:
  SubmodelSpec(ResModel base, ParamPartition partition, std::vector<RadialFn> basis,
               TiltFamily family);

  const ResModel& base() const noexcept { return base_; }
  const ParamPartition& partition() const noexcept { return partition_; }
  const std::vector<RadialFn>& basis_fns() const noexcept { return basis_; }
  TiltFamily family() const noexcept { return family_; }
  int k() const noexcept { return static_cast<int>(basis_.size()); }
  int r_finite() const noexcept { return partition_.r(); }
  int r_total() const noexcept { return k() + r_finite(); }

  double tilt(double t, const Eigen::Ref<const Vector>& eta) const;
  /// A(eta) = log E_0[exp(eta . b(t))], by radial quadrature; exactly 0 at eta = 0.
  double log_normalizer(const Eigen::Ref<const Vector>& eta) const;
  /// Log-density of the tilted member at (base mu, base Sigma).
  double logpdf(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eta) const;

  /// k x M matrix of b_j(t_m), uncentered.
  Matrix evaluate_basis(const Vector& t) const;

 private:
  ResModel base_;
  ParamPartition partition_;
  std::vector<RadialFn> basis_;
  TiltFamily family_;
};

std::vector<RadialFn> tilt_basis(const DensityGenerator& g, int k, TiltFamily family);

/// Throws SubmodelError when k < 1 or a tilt in the working ball is not
/// normalizable.
SubmodelSpec build_submodel(const ResModel& base, const ParamPartition& partition, int k,
                            TiltFamily family);
SubmodelSpec build_submodel(const ResModel& base, const ParamPartition& partition,
                            std::vector<RadialFn> basis);

/// Tilt scores (centered b_j) stacked with the finite nuisance scores.
FunctionSample nuisance_score_submodel(const SubmodelSpec& spec, const SampleBatch& batch);

/// s_gamma - Pi(s_gamma | sieve span).
FunctionSample semipar_efficient_score(const FunctionSample& s_gamma, const SpanBasis& sieve_span);

/// E_0{s s^T} of a semiparametric efficient score.
Matrix semipar_efficient_fim(const FunctionSample& efficient_score);

/// CRB of the interest block inside one parametric submodel, through the
/// Schur complement of the submodel's full FIM (independent of the sieve).
/// The nuisance block is equilibrated and pseudo-inverted, so directions the
/// batch cannot resolve are dropped rather than amplified.
Matrix submodel_crb(const SubmodelSpec& spec, const SampleBatch& batch);

struct SieveOptions {
  double rtol = 1e-3;
  /// Loewner monotonicity tolerance, scaled by max(1, ||scrb||_F).
  double monotone_tol = 1e-9;
  /// A new direction is kept when its residual norm after orthogonalization
  /// exceeds this fraction of its own norm.
  double drop_tol = 1e-8;
};

struct SieveTrace {
  std::vector<int> k_schedule;
  std::vector<int> span_dims;
  std::vector<Matrix> scrb_k;
  std::vector<double> metric;          // relative Frobenius change to previous step
  std::vector<double> gram_condition;  // unit-diagonal Gram of the raw basis
  Matrix crb_parametric;               // finite nuisance only
  Matrix final_scrb;
  bool converged = false;
  TiltFamily family = TiltFamily::PolyLogT;
  ParamPartition partition;
  Eigen::Index m = 0;
  std::uint64_t seed = 0;
  std::uint64_t model_fingerprint = 0;
};

/// Throws ScheduleError for a schedule that is not strictly increasing or a
/// family whose bases would not be nested along it.
void validate_schedule(const std::vector<int>& schedule, TiltFamily family);

/// Sieve SCRB on an existing batch. Throws IntegrityError if the trace is not
/// Loewner-monotone within tolerance.
SieveTrace scrb_on_batch(const ResModel& base, const ParamPartition& partition,
                         const SampleBatch& batch, const std::vector<int>& schedule,
                         TiltFamily family, const SieveOptions& options = {});

SieveTrace scrb(const ResModel& base, const ParamPartition& partition,
                const std::vector<int>& schedule, Eigen::Index m, std::uint64_t seed,
                TiltFamily family, const SieveOptions& options = {});

void write_trace_csv(std::ostream& os, const SieveTrace& trace, const Metadata& extra = {});

}  // namespace resbound
