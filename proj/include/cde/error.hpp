#pragma once

#include <stdexcept>
#include <string>

namespace cde {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: bad magic, bad JSON line, unknown enum value.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Payload shorter or longer than its header claims.
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Operand shapes or dimensions do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value or combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A required input file or record is absent.
class InputError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cde
