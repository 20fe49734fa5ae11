#pragma once

#include <stdexcept>
#include <string>

namespace powerctl {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input: parameters, dimensions, config. The CLI maps these to exit code 2.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed to converge or to classify. CLI exit code 3.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class AssumptionViolation : public ValidationError {
 public:
  AssumptionViolation(std::string assumption, double value, const std::string& detail)
      : ValidationError(assumption + " violated (value " + std::to_string(value) + "): " + detail),
        assumption_(std::move(assumption)),
        value_(value) {}

  const std::string& assumption() const noexcept { return assumption_; }
  double value() const noexcept { return value_; }

 private:
  std::string assumption_;
  double value_;
};

class NotADistribution : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class OutOfRange : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class WrongDimensions : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Transmitting `k` users cannot meet the SINR target within the power cap.
class Infeasible : public ValidationError {
 public:
  Infeasible(int k, const std::string& detail)
      : ValidationError("action k=" + std::to_string(k) + " infeasible: " + detail), k_(k) {}
  int k() const noexcept { return k_; }

 private:
  int k_;
};

class StepTooLarge : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NonConvergent : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoConvergence : public NumericalError {
 public:
  NoConvergence(long iterations, double span)
      : NumericalError("relative value iteration did not converge after " +
                       std::to_string(iterations) + " iterations (span " + std::to_string(span) +
                       ")"),
        iterations_(iterations),
        span_(span) {}
  long iterations() const noexcept { return iterations_; }
  double span() const noexcept { return span_; }

 private:
  long iterations_;
  double span_;
};

class MultichainDetected : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateRegime : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConvexityUnverified : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace powerctl
