#pragma once

#include <stdexcept>
#include <string>

namespace sflab {

// value cannot be represented in the signed range of an RNS context
struct RangeExceeded : std::out_of_range {
  using std::out_of_range::out_of_range;
};

// operands produced under different RNS contexts
struct ContextMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// scalar input outside the open interval a codec accepts
struct OutOfRange : std::domain_error {
  using std::domain_error::domain_error;
};

// count does not fit the requested codeword capacity
struct Overflow : std::length_error {
  using std::length_error::length_error;
};

// tensor names or shapes disagree between models
struct LayoutMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// cluster count outside [1, n]
struct InvalidCluster : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// experiment or component configuration fails validation
struct ConfigInvalid : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace sflab
