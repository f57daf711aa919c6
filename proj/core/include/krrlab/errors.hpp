#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace krrlab {

/// Raised when an argument lies outside the mathematical domain of an operation
/// (a point outside [0,1], a non-positive smoothness, an even node count, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a quantity is undefined for the given input, e.g. a smoothness
/// estimate for a target whose coefficients are all numerically zero.
class UndefinedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a symmetric positive-definite factorization meets a
/// non-positive pivot. `pivot()` is the 0-based row at which it failed.
class SingularSystemError : public std::runtime_error {
 public:
  SingularSystemError(std::size_t pivot, double value, const std::string& what)
      : std::runtime_error(what), pivot_(pivot), value_(value) {}

  std::size_t pivot() const noexcept { return pivot_; }
  double pivot_value() const noexcept { return value_; }

 private:
  std::size_t pivot_;
  double value_;
};

}  // namespace krrlab
