#pragma once

#include <stdexcept>
#include <string>

namespace coins {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input values: bad sizes, out-of-range coins, mismatched instances.
struct ValidationError : Error {
    using Error::Error;
};

// Instance too large for exhaustive treatment (configuration cap exceeded).
struct CapacityError : Error {
    using Error::Error;
};

// Unreadable or syntactically broken strategy file.
struct ParseError : Error {
    using Error::Error;
};

// A required base strategy is not in the library and could not be produced.
struct DependencyError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace coins
