#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace resbound {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A requested moment of the radial law does not exist.
class MomentError : public ModelError {
 public:
  using ModelError::ModelError;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class BatchMismatch : public Error {
 public:
  using Error::Error;
};

class SingularSpan : public Error {
 public:
  using Error::Error;
};

class ScoreError : public Error {
 public:
  ScoreError(const std::string& what, std::ptrdiff_t sample_index = -1)
      : Error(what), sample_index_(sample_index) {}
  std::ptrdiff_t sample_index() const noexcept { return sample_index_; }

 private:
  std::ptrdiff_t sample_index_;
};

class SingularFim : public Error {
 public:
  using Error::Error;
};

/// The efficient score collapsed: the interest parameter is not identifiable
/// once the nuisance directions are projected out.
class NonIdentifiable : public SingularFim {
 public:
  using SingularFim::SingularFim;
};

class SubmodelError : public Error {
 public:
  using Error::Error;
};

class ScheduleError : public Error {
 public:
  using Error::Error;
};

/// A property that holds exactly on a shared batch was violated.
class IntegrityError : public Error {
 public:
  using Error::Error;
};

class EstimatorError : public Error {
 public:
  using Error::Error;
};

class NonConvergence : public EstimatorError {
 public:
  NonConvergence(const std::string& what, double residual)
      : EstimatorError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace resbound
