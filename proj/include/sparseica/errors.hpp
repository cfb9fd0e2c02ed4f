#pragma once

#include <stdexcept>
#include <string>

namespace sparseica {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-conformable shapes, empty inputs, ragged files.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Covariance rank too low for the requested reduction.
class RankError : public Error {
 public:
  RankError(const std::string& what, std::size_t deficient_index)
      : Error(what), deficient_index_(deficient_index) {}
  std::size_t deficient_index() const noexcept { return deficient_index_; }

 private:
  std::size_t deficient_index_;
};

/// A demixing row collapsed into the span of the others.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

/// Out-of-domain scalar parameter (negative shape, zero CNR, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Samples not standardized, or no measuring function can bound them.
class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Max-entropy table could not be built or a cache file failed validation.
class TableError : public Error {
 public:
  using Error::Error;
};

/// Metric undefined on the given input (zero variance, all-zero vector).
class MetricError : public Error {
 public:
  using Error::Error;
};

}  // namespace sparseica
