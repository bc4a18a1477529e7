// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hbf {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class DegenerateBeamError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Bad or missing configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Hash or format mismatch in persisted artifacts (CLI exit code 3).
class IntegrityError : public Error {
 public:
  using Error::Error;
};

/// An operation needs an artifact that is not available (CLI exit code 4).
class DependencyError : public Error {
 public:
  using Error::Error;
};

class NoCapacityError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values encountered during optimization or training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace hbf
