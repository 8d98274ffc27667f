#pragma once

#include <stdexcept>
#include <string>

namespace imfas {

// Base class of every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid layer, model, generator or run configuration.
struct SpecError : Error {
    using Error::Error;
};

// An input tensor does not have the shape the parameters require.
struct ShapeError : Error {
    using Error::Error;
};

// A backward pass was replayed against a cache that does not match.
struct CacheError : Error {
    using Error::Error;
};

// Dataset contents failed validation (NaN, out-of-range value, grid hole).
struct ValidationError : Error {
    using Error::Error;
};

// Non-finite values or degenerate statistics encountered mid-computation.
struct NumericError : Error {
    using Error::Error;
};

// File and filesystem problems.
struct IoError : Error {
    using Error::Error;
};

}  // namespace imfas
