#pragma once

#include <stdexcept>
#include <string>

namespace ibmexit {

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A series or iteration failed to reach its tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Not enough series terms for the requested point.
class TruncationError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

// Root finding was handed an interval without a sign change.
class BracketError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double estimate, double error)
      : std::runtime_error(what), estimate_(estimate), error_(error) {}
  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

#define IBMEXIT_REQUIRE(cond, Err, msg) \
  do {                                  \
    if (!(cond)) throw Err(msg);        \
  } while (0)

}  // namespace ibmexit
