#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdlp {

/// Base class of all errors thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (parameter out of range).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// An operation does not support the kernel shape it was given.
class UnsupportedShapeError : public Error {
 public:
  using Error::Error;
};

/// A model or experiment configuration is inadmissible.
class ConfigError : public Error {
 public:
  using Error::Error;
  ConfigError(const std::string& msg, std::size_t line, std::size_t column)
      : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_ = 0;
  std::size_t column_ = 0;
};

/// Evaluation past the existence horizon of a bound.
class HorizonExceededError : public Error {
 public:
  using Error::Error;
};

/// Kirkwood closure evaluated at zero density.
class DegenerateClosureError : public Error {
 public:
  using Error::Error;
};

/// Numerical integration produced NaN or blew up.
class IntegrationAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace bdlp
