#ifndef UQSTREAM_ERRORS_HPP
#define UQSTREAM_ERRORS_HPP

#include <stdexcept>

namespace uqstream {

/// Argument outside the support or parameter space of a distribution.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Malformed input data (non-finite observations, shape mismatches).
struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// API misuse: mismatched families, out-of-order stages, missing blocks.
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Importance weights that sum to zero (or are negative / non-finite).
struct DegenerateWeightsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Requested capability is not available for this model.
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace uqstream

#endif  // UQSTREAM_ERRORS_HPP
