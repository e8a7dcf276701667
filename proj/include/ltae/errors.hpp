#pragma once

#include <stdexcept>
#include <string>

namespace ltae {

// Base class for all toolkit failures.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor shapes incompatible with the requested operation.
struct DimensionError : Error {
  using Error::Error;
};

// A configuration object violates its invariants (e.g. head count does not
// divide the embedding width).
struct ConfigError : Error {
  using Error::Error;
};

// An operation was called outside its contract (non-scalar loss, label out
// of range, ...).
struct ContractError : Error {
  using Error::Error;
};

// Malformed or inconsistent dataset / checkpoint content.
struct DataError : Error {
  using Error::Error;
};

// Numeric failure at runtime (divergent training, undefined metric).
struct NumericError : Error {
  using Error::Error;
};

}  // namespace ltae
