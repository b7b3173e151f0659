#pragma once

#include <stdexcept>
#include <string>

namespace vg {

/// Base of every error raised by the toolkit. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad input: wrong shapes, empty sets, out-of-range configuration.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

/// A parameter lies outside the domain of a function (e.g. u outside the knot span).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Something went wrong numerically (singular system, NaN loss, ...).
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// Geometry that cannot support a frame (zero tangent, parallel vectors).
class DegenerateError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class TrainingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

namespace detail {
[[noreturn]] inline void fail_validation(const std::string& what) { throw ValidationError(what); }
}  // namespace detail

inline void require(bool cond, const std::string& what) {
  if (!cond) detail::fail_validation(what);
}

}  // namespace vg
