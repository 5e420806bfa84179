// SPDX-License-Identifier: Apache-2.0

#ifndef GKDV_ERRORS_HPP
#define GKDV_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gkdv
{

// Bad input: violated preconditions, inapplicable models, malformed files.
// The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

// Raised when two embedded waves overlap above the embedding threshold.
class OverlapError : public ValidationError
{
public:
  using ValidationError::ValidationError;
};

// A numerical procedure failed. The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

class NoConvergenceError : public NumericalError
{
public:
  NoConvergenceError(const std::string &what, int iterations, double last_residual)
    : NumericalError(what), iterations_(iterations), last_residual_(last_residual)
  {
  }
  int iterations() const noexcept { return iterations_; }
  double last_residual() const noexcept { return last_residual_; }

private:
  int iterations_;
  double last_residual_;
};

// Robin tail closure needs a positive eigenvalue.
class EigenvalueSignError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

// Iterate or field grew past the allowed bound.
class BlowupError : public NumericalError
{
public:
  using NumericalError::NumericalError;
};

// Step failure annotated with the simulation time at which it happened.
class StepFailure : public NumericalError
{
public:
  StepFailure(const std::string &what, double time) : NumericalError(what), time_(time) {}
  double time() const noexcept { return time_; }

private:
  double time_;
};

} // namespace gkdv

#endif // GKDV_ERRORS_HPP
