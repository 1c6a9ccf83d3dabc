#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "resbound/csv.hpp"
#include "resbound/model.hpp"

namespace resbound {

struct LocationScatter {
  Vector location;
  /// Shape: rescaled onto the constraint surface.
  Matrix scatter;
  int iterations = 0;
  double residual = 0.0;
  /// Observations dropped because they coincide with the center.
  int excluded = 0;
};

struct FixedPointOptions {
  double tol = 1e-9;
  int max_iter = 500;
};

/// Sample mean and unbiased covariance; the covariance is rescaled onto the
/// constraint surface. Throws EstimatorError when M <= N or the covariance is
/// rank deficient.
LocationScatter sample_moments(const Matrix& data, Constraint constraint);

/// Coordinate-wise median (average of the two middle values for even M).
Vector coordinate_median(const Matrix& data);

/// Tyler's shape fixed point sigma <- (N/M) sum r r^T / (r^T sigma^{-1} r).
/// With no center the location is iterated jointly with weights t^{-1/2}.
/// Throws NonConvergence when max_iter is exhausted.
LocationScatter tyler(const Matrix& data, const std::optional<Vector>& center,
                      Constraint constraint, const FixedPointOptions& options = {});

/// Huber M-estimator of location and scatter. c^2 is the q01 quantile of
/// chi^2_N; scatter weights min(1, c^2/t), location weights min(1, c/sqrt(t)).
LocationScatter huber_m(const Matrix& data, double q01, Constraint constraint,
                        const FixedPointOptions& options = {});

/// Student-t maximum likelihood (EM fixed point, weights (N+nu)/(nu+t)).
/// nu = infinity gives unit weights.
LocationScatter student_t_mle(const Matrix& data, double nu, Constraint constraint,
                              const FixedPointOptions& options = {});

enum class EstimatorId { SampleMoments, Tyler, Huber, StudentTMle };

std::string to_string(EstimatorId id);
EstimatorId parse_estimator(const std::string& s);

struct EstimatorSpec {
  EstimatorId id = EstimatorId::SampleMoments;
  double huber_q = 0.9;
  double student_nu = 4.0;
  /// Tyler uses the true location when set; otherwise it iterates jointly.
  bool tyler_known_center = true;
  FixedPointOptions options;
};

LocationScatter run_estimator(const EstimatorSpec& spec, const Matrix& data, const ResModel& truth);

/// Bounds for one observation, in packed interest coordinates.
struct BenchmarkBounds {
  Matrix crb;
  Matrix scrb;
};

struct EstimatorReport {
  std::string estimator;
  int trials = 0;
  Eigen::Index m = 0;
  int failures = 0;
  bool valid = true;
  Vector bias;
  Matrix error_cov;
  /// lambda_min(M * error_cov - bound).
  double slack_crb = 0.0;
  double slack_scrb = 0.0;
  /// Bootstrap standard errors of the two slacks.
  double slack_crb_se = 0.0;
  double slack_scrb_se = 0.0;
  double mean_iterations = 0.0;
  /// Interest positions entering the slacks (all of them unless the
  /// estimator does not estimate location).
  std::vector<int> compared;
  /// trials x q errors of the successful trials, in trial order.
  Matrix errors;
  std::vector<int> trial_index;
};

inline constexpr double kMaxFailureRate = 0.05;
inline constexpr int kBootstrapResamples = 200;

/// Runs every estimator on R batches of size M. Trial r draws its batch with
/// seed derive_seed(seed, "trial", r); all estimators share that batch.
std::vector<EstimatorReport> benchmark(const ResModel& model, const ParamPartition& partition,
                                       const std::vector<EstimatorSpec>& estimators, int r,
                                       Eigen::Index m, std::uint64_t seed,
                                       const BenchmarkBounds& bounds);

/// Bootstrap SE of lambda_min(M * cov(errors) - bound) over trials.
double bootstrap_slack_se(const Matrix& errors, Eigen::Index m, const Matrix& bound,
                          std::uint64_t seed, int resamples = kBootstrapResamples);

void write_report_csv(std::ostream& os, const std::vector<EstimatorReport>& reports,
                      const Metadata& meta = {});
void write_trials_csv(std::ostream& os, const std::vector<EstimatorReport>& reports,
                      const Metadata& meta = {});

}  // namespace resbound
