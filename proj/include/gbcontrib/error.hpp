#pragma once

#include <stdexcept>
#include <string>

namespace gbcontrib {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (CSV contents, dataset invariants).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A feature vector or matrix whose width does not match the model.
class DimensionError : public DataError {
 public:
  using DataError::DataError;
};

/// Out-of-range hyperparameters or option values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A model file or in-memory tree that violates the model schema.
class ModelFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace gbcontrib
