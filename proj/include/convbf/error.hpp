// Copyright 2026 convbf authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#ifndef CONVBF_ERROR_HPP
#define CONVBF_ERROR_HPP

#include <stdexcept>
#include <string>

namespace convbf {

// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller-supplied argument violates a documented precondition.
struct InvalidInput : Error {
  using Error::Error;
};

// A numerical routine failed (factorization breakdown, non-finite result).
struct NumericalFailure : Error {
  using Error::Error;
};

// Steering estimation produced no usable direction (no signal energy above
// the noise floor, or a vanishing reference-channel component).
struct DegenerateSteering : NumericalFailure {
  using NumericalFailure::NumericalFailure;
};

}  // namespace convbf

#endif  // CONVBF_ERROR_HPP
