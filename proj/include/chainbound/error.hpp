#pragma once

#include <stdexcept>
#include <string>

namespace chainbound {

/// Malformed input: bad parameters, files that fail validation, non-reversible
/// or reducible chains. The CLI maps this to exit code 2.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative method failed to converge or produced a non-finite value.
/// The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace chainbound
