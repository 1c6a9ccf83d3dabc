#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "resbound/estimators.hpp"
#include "resbound/model.hpp"
#include "resbound/semiparam.hpp"

namespace resbound {

/// Flat `key = value` experiment description. Lines starting with '#' are
/// comments; lists are whitespace separated.
///
///   dimension   N (required)
///   mu          N numbers                 default: zeros
///   sigma       N*N numbers, row-major    default: identity (rescaled onto the constraint)
///   generator   gaussian | student_t | generalized_gaussian   (required)
///   shape       nu (student_t) or s (generalized_gaussian)
///   constraint  trace | det               default: trace
///   interest    mu | shape | mu+shape     default: mu
///   seed        unsigned 64-bit integer   (required)
///   M           sample size               default: 10000
///   R           benchmark trials          default: 100
///   bound_M     sample size for bounds in `bench`  default: 100000
///   schedule    strictly increasing sieve sizes    default: 2 4 8 16
///   family      polylog | bspline         default: polylog
///   rtol        sieve stabilization tolerance      default: 1e-3
///   estimators  subset of sample_moments tyler huber student_t_mle
///   huber_q     default 0.9;  student_nu  default 4;  tyler_center  known | joint
///   tol         fixed-point tolerance     default 1e-9;  max_iter  default 500
struct ExperimentConfig {
  int dimension = 0;
  std::vector<double> mu;
  std::vector<double> sigma;
  std::string generator;
  double shape = 0.0;
  Constraint constraint = Constraint::TraceN;
  InterestSet interest = InterestSet::Mu;
  std::uint64_t seed = 0;
  Eigen::Index m = 10000;
  int r = 100;
  Eigen::Index bound_m = 100000;
  std::vector<int> schedule{2, 4, 8, 16};
  TiltFamily family = TiltFamily::PolyLogT;
  double rtol = 1e-3;
  std::vector<EstimatorSpec> estimators;

  ResModel model() const;
  ParamPartition partition() const;
  /// Canonical re-serialization; its FNV-1a hash identifies the config.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Throws ConfigError on unknown keys, malformed values or missing required keys.
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

}  // namespace resbound
