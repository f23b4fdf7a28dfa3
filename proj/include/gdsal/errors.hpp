#pragma once

#include <stdexcept>
#include <string>

namespace gdsal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong order (e.g. backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or incompatible file contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A numeric computation left its domain (log of zero, non-finite gradient).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Bad user-supplied configuration value.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace gdsal
