#pragma once

#include <stdexcept>
#include <string>

namespace smoothrob {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor/model dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A scalar argument is outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A class index is out of range.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed or corrupted on-disk data (bad magic, truncation, checksum).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A file carries a format version this build cannot read.
class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Training diverged (non-finite loss).
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// An attack produced an infeasible point. Always a bug, never a metric.
class InvariantError : public Error {
 public:
  using Error::Error;
};

}  // namespace smoothrob
