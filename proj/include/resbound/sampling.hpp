#pragma once

#include <cstdint>
#include <iosfwd>

#include "resbound/csv.hpp"
#include "resbound/model.hpp"

namespace resbound {

/// M i.i.d. draws from one ResModel. Rows are observations.
struct SampleBatch {
  Matrix data;  // M x N
  std::uint64_t model_fingerprint = 0;
  std::uint64_t seed = 0;

  Eigen::Index size() const noexcept { return data.rows(); }
  int dim() const noexcept { return static_cast<int>(data.cols()); }
  /// Identity used to tie function samples to this batch.
  std::uint64_t batch_id() const;
};

/// x = mu + sqrt(t) * L * u with u uniform on the sphere and t drawn by
/// inverse CDF. Row m uses its own counter stream derived from (seed, m), so
/// the batch is a pure function of (model, M, seed) for any thread count.
SampleBatch sample_res(const ResModel& model, Eigen::Index m, std::uint64_t seed);

/// Mahalanobis distances of every row of the batch under the model.
Vector mahalanobis_all(const ResModel& model, const SampleBatch& batch);

/// Throws BatchMismatch unless the batch was drawn from this model.
void require_same_model(const ResModel& model, const SampleBatch& batch);

struct MomentEstimate {
  double value;
  double std_error;
};

/// Monte Carlo estimate of E[R^k] for the modular radius R.
/// Throws MomentError when the moment is infinite for the generator.
MomentEstimate radial_moment(const ResModel& model, double k, Eigen::Index m, std::uint64_t seed);

void write_batch_csv(std::ostream& os, const SampleBatch& batch, const Metadata& extra = {});
SampleBatch read_batch_csv(std::istream& is);

}  // namespace resbound
