#pragma once

#include <stdexcept>
#include <string>

namespace levystore {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model or query parameter is outside its admissible range.
class InvalidParameter : public Error {
 public:
  InvalidParameter(std::string parameter, const std::string& message)
      : Error(parameter + ": " + message), parameter_(std::move(parameter)) {}

  const std::string& parameter() const noexcept { return parameter_; }

 private:
  std::string parameter_;
};

// Evaluation requested outside a function's domain of definition.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The requested operation does not apply to this model family.
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// A numerical routine failed to reach its tolerance.  Carries the best
// estimate obtained and the tolerance that was attempted.
class NumericalFailure : public Error {
 public:
  NumericalFailure(const std::string& message, double best_estimate = 0.0,
                   double tolerance = 0.0)
      : Error(message), best_estimate_(best_estimate), tolerance_(tolerance) {}

  double best_estimate() const noexcept { return best_estimate_; }
  double tolerance() const noexcept { return tolerance_; }

 private:
  double best_estimate_;
  double tolerance_;
};

// A random variate generator exhausted its iteration budget.
class SamplerFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace levystore
