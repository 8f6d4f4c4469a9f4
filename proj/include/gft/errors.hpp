#pragma once

#include <stdexcept>
#include <string>

namespace gft {

/// Precondition violations and malformed input (bad distributions, unknown
/// names, out-of-domain quantiles).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exact enumeration would exceed its configured state cap.
class TooLarge : public std::length_error {
 public:
  using std::length_error::length_error;
};

}  // namespace gft
