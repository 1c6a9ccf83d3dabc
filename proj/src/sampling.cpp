#include "resbound/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "resbound/errors.hpp"
#include "resbound/parallel.hpp"
#include "resbound/rng.hpp"

namespace resbound {

std::uint64_t SampleBatch::batch_id() const {
  std::string key = to_hex(model_fingerprint) + "/" + std::to_string(seed) + "/" +
                    std::to_string(data.rows()) + "x" + std::to_string(data.cols());
  return fnv1a64(key);
}

SampleBatch sample_res(const ResModel& model, Eigen::Index m, std::uint64_t seed) {
  if (m < 1) throw SamplingError("sample_res: M must be >= 1");
  const int n = model.dim();
  SampleBatch batch;
  batch.data.resize(m, n);
  batch.model_fingerprint = model.fingerprint();
  batch.seed = seed;
  const Matrix& chol = model.sigma_chol();
  const auto& gen = model.generator();
  const auto n_chunks = static_cast<std::size_t>((m + kReductionChunk - 1) / kReductionChunk);
  parallel_for(n_chunks, [&](std::size_t c) {
    const Eigen::Index begin = static_cast<Eigen::Index>(c) * kReductionChunk;
    const Eigen::Index end = std::min(m, begin + kReductionChunk);
    Vector z(n);
    for (Eigen::Index row = begin; row < end; ++row) {
      CounterStream rng(derive_seed(seed, "sample", static_cast<std::uint64_t>(row)));
      double norm2 = 0.0;
      do {
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        norm2 = z.squaredNorm();
      } while (norm2 == 0.0);
      const double t = gen.mahalanobis_quantile(rng.uniform());
      if (!std::isfinite(t)) {
        throw SamplingError("sample_res: non-finite radial draw at row " + std::to_string(row));
      }
      const Vector x = model.mu() + std::sqrt(t / norm2) * (chol * z);
      batch.data.row(row) = x.transpose();
    }
  });
  return batch;
}

void require_same_model(const ResModel& model, const SampleBatch& batch) {
  if (batch.model_fingerprint != model.fingerprint()) {
    throw BatchMismatch("batch fingerprint " + to_hex(batch.model_fingerprint) +
                        " does not match model " + to_hex(model.fingerprint()));
  }
  if (batch.dim() != model.dim()) throw ShapeError("batch dimension differs from model");
}

Vector mahalanobis_all(const ResModel& model, const SampleBatch& batch) {
  if (batch.dim() != model.dim()) throw ShapeError("mahalanobis_all: dimension mismatch");
  const Matrix centered = batch.data.transpose().colwise() - model.mu();
  const Matrix z = model.sigma_chol().triangularView<Eigen::Lower>().solve(centered);
  return z.colwise().squaredNorm().transpose();
}

MomentEstimate radial_moment(const ResModel& model, double k, Eigen::Index m, std::uint64_t seed) {
  const auto& gen = model.generator();
  if (!gen.has_moment(k)) {
    throw MomentError("E[R^" + format_double(k) + "] is infinite for " + gen.describe());
  }
  if (m < 2) throw SamplingError("radial_moment: M must be >= 2");
  CompensatedSum sum;
  CompensatedSum sum_sq;
  for (Eigen::Index i = 0; i < m; ++i) {
    CounterStream rng(derive_seed(seed, "radial", static_cast<std::uint64_t>(i)));
    const double r = gen.radius_quantile(rng.uniform());
    const double v = std::pow(r, k);
    sum.add(v);
    sum_sq.add(v * v);
  }
  const double md = static_cast<double>(m);
  const double mean = sum.value() / md;
  const double var = std::max(0.0, (sum_sq.value() - md * mean * mean) / (md - 1.0));
  return {mean, std::sqrt(var / md)};
}

void write_batch_csv(std::ostream& os, const SampleBatch& batch, const Metadata& extra) {
  Metadata meta{{"version", std::string("resbound ") + kVersion},
                {"fingerprint", to_hex(batch.model_fingerprint)},
                {"seed", std::to_string(batch.seed)},
                {"N", std::to_string(batch.dim())},
                {"M", std::to_string(batch.size())}};
  meta.insert(meta.end(), extra.begin(), extra.end());
  write_metadata(os, meta);
  for (int j = 0; j < batch.dim(); ++j) os << (j ? "," : "") << 'x' << (j + 1);
  os << '\n';
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    for (int j = 0; j < batch.dim(); ++j) os << (j ? "," : "") << format_double(batch.data(i, j));
    os << '\n';
  }
}

SampleBatch read_batch_csv(std::istream& is) {
  SampleBatch batch;
  std::string line;
  int n = -1;
  bool header_seen = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::string key, value;
    if (line[0] == '#') {
      if (parse_metadata_line(line, key, value)) {
        try {
          if (key == "fingerprint") batch.model_fingerprint = std::stoull(value, nullptr, 16);
          if (key == "seed") batch.seed = std::stoull(value);
          if (key == "N") n = std::stoi(value);
        } catch (const std::exception&) {
          throw ConfigError("batch csv: malformed metadata line '" + line + "'");
        }
      }
      continue;
    }
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      header_seen = true;
      if (n < 0) n = static_cast<int>(fields.size());
      if (static_cast<int>(fields.size()) != n) throw ShapeError("batch csv: header width differs from N");
      continue;
    }
    if (static_cast<int>(fields.size()) != n) throw ShapeError("batch csv: ragged row");
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) {
      try {
        row.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw ConfigError("batch csv: bad number '" + f + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  if (n < 1 || rows.empty()) throw ConfigError("batch csv: no data");
  batch.data.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int j = 0; j < n; ++j) batch.data(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
  }
  if (!batch.data.allFinite()) throw SamplingError("batch csv: non-finite entries");
  return batch;
}

}  // namespace resbound
