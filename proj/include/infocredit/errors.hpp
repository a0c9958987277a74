#pragma once

#include <stdexcept>
#include <string>

namespace infocredit {

/// Precondition violation by the caller (bad parameters, wrong state).
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature gave up. Carries the best estimate reached.
class QuadratureError : public NumericalError {
public:
  QuadratureError(const std::string& what, double estimate, double achieved_error)
      : NumericalError(what), estimate_(estimate), achieved_error_(achieved_error) {}

  double estimate() const noexcept { return estimate_; }
  double achieved_error() const noexcept { return achieved_error_; }

private:
  double estimate_;
  double achieved_error_;
};

/// The function does not change sign over the supplied bracket.
class BracketError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Root iteration exhausted its budget before the bracket became small enough.
class RootConvergenceError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

/// Posterior mass vanished (underflow after shifting, or everything lies
/// outside the truncated prior support).
class DegenerateError : public NumericalError {
public:
  using NumericalError::NumericalError;
};

} // namespace infocredit
