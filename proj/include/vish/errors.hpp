#pragma once

#include <stdexcept>
#include <string>

namespace vish {

// Numerical failure: factorization breakdown, divergence, non-finite results.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

// A fundamental system / basis could not be constructed within the retry budget.
class ConstructionError : public NumericalError {
 public:
  explicit ConstructionError(const std::string& msg) : NumericalError(msg) {}
};

// A matrix factorization failed or is too ill-conditioned to trust.
class ConditioningError : public NumericalError {
 public:
  explicit ConditioningError(const std::string& msg) : NumericalError(msg) {}
};

// Input dimensionality outside the supported range.
class DimensionError : public std::invalid_argument {
 public:
  explicit DimensionError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace vish
