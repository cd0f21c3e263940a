#pragma once

#include <stdexcept>
#include <string>

namespace steercomp {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required column or feature name is unknown or absent.
class SchemaError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data (unparseable cell, non-monotone timestamps, NaN entry).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A caller violated a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Too few samples to perform the requested operation.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Eigen-decomposition has no usable spectrum (all-zero input).
class DegenerateSpectrumError : public Error {
 public:
  using Error::Error;
};

/// Metric is mathematically undefined for the given series (constant input).
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace steercomp
