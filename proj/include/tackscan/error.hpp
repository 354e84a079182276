#pragma once

#include <stdexcept>
#include <string>

namespace tackscan {

/// Bad input: malformed config, invalid parameters, inconsistent data.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A well-formed request that failed while running (I/O, solver limits).
class RuntimeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SMO exhausted its iteration budget before meeting the KKT tolerance.
class ConvergenceError : public RuntimeFailure {
 public:
  ConvergenceError(const std::string& what, double max_violation)
      : RuntimeFailure(what), max_violation_(max_violation) {}
  double max_violation() const noexcept { return max_violation_; }

 private:
  double max_violation_;
};

}  // namespace tackscan
