#pragma once

#include <stdexcept>
#include <string>

namespace catspin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ensemble size out of range, or a state/operator dimension mismatch.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Cavity non-ideality budget with Theta >= 1 (no coherent atoms left).
class BudgetError : public Error {
 public:
  using Error::Error;
};

}  // namespace catspin
