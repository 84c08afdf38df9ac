#pragma once

#include <stdexcept>
#include <string>

namespace volterra {

/// Argument outside the mathematical domain of an operation (t <= 0 for a
/// singular kernel, odd Gaussian moment order, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base class for numeric failures. The CLI maps these to exit code 1.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class QuadratureError : public NumericError {
 public:
  QuadratureError(const std::string& what, double achieved_error)
      : NumericError(what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
        achieved_error_(achieved_error) {}

  double achieved_error() const noexcept { return achieved_error_; }

 private:
  double achieved_error_;
};

class FactorizationError : public NumericError {
 public:
  FactorizationError(const std::string& what, double min_pivot)
      : NumericError(what + " (most negative pivot " + std::to_string(min_pivot) + ")"),
        min_pivot_(min_pivot) {}

  double min_pivot() const noexcept { return min_pivot_; }

 private:
  double min_pivot_;
};

/// Quadrature-rule construction produced an invalid rule (recurrence
/// breakdown, node outside its cell, negative weight).
class RuleConstructionError : public NumericError {
 public:
  using NumericError::NumericError;
};

/// Malformed configuration or expression text. Carries a 1-based position
/// (line 0 when the error is not tied to a file location).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, int line = 0, int column = 0)
      : std::runtime_error(format(what, line, column)), line_(line), column_(column) {}

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, int line, int column) {
    if (line <= 0) return what;
    return std::to_string(line) + ":" + std::to_string(column) + ": " + what;
  }

  int line_;
  int column_;
};

}  // namespace volterra
