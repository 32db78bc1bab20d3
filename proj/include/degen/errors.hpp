#pragma once

#include <stdexcept>
#include <string>

namespace degen {

/// Base of every error raised by the library. The CLI maps each subclass
/// onto a distinct process exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration (exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Expression or config text that failed to parse; carries a 1-based location.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line, int column)
      : ConfigError(what + " (line " + std::to_string(line) + ", column " +
                    std::to_string(column) + ")"),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Invalid argument to an operation (negative ladder level, bad interval, ...).
class ArgumentError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A point outside the domain where an evaluation was requested.
class DomainError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A structural invariant of the input failed (e.g. asymmetric diffusion matrix).
class InvariantError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// A named hypothesis gate failed (exit code 3).
class GateError : public Error {
 public:
  using Error::Error;
};

/// Quadrature non-convergence, singular systems, NaNs, instability (exit code 4).
class NumericError : public Error {
 public:
  using Error::Error;
};

/// An in-config assertion did not hold (exit code 5).
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace degen
