#pragma once

#include <stdexcept>
#include <string>

namespace retsim {

// Query has no informative coordinate left after stop-word masking.
struct EmptySupportError : std::runtime_error {
  explicit EmptySupportError(const std::string& what) : std::runtime_error(what) {}
};

// Effective rate M / sum(r) requested for an all-zero repetition vector.
struct UndefinedRateError : std::runtime_error {
  explicit UndefinedRateError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace retsim
