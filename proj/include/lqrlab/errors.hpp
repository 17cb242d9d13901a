#pragma once

#include <stdexcept>
#include <string>

namespace lqrlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  /// Process exit code the CLI maps this error to.
  virtual int exit_code() const noexcept { return 1; }
};

/// Bad caller input: dimensions, normalization, violated preconditions.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 2; }
};

class PreconditionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// The requested operation lies outside the regime where the certificate applies.
class OutsideGuaranteeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Solver breakdown or a numerically detected property violation.
class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

/// A matrix that had to be Schur stable is not (rho >= 1 - margin).
class UnstableInputError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Riccati value iteration diverged or stalled: no stabilizing solution.
class NotStabilizableError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// State norm crossed the overflow guard during a rollout.
class BlowupError : public NumericalError {
 public:
  BlowupError(long time, const std::string& what)
      : NumericalError(what), time_(time) {}
  long time() const noexcept { return time_; }

 private:
  long time_;
};

}  // namespace lqrlab
