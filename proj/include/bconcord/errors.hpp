#pragma once

#include <stdexcept>
#include <string>

namespace bconcord {

// Base for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed files, dimension mismatches, invalid flags.
// The CLI maps these to exit code 1.
struct InvalidInput : Error {
    using Error::Error;
};

// Numerical failure on valid input (improper posterior, singular system,
// degenerate oracle). The CLI maps these to exit code 2.
struct NumericalError : Error {
    using Error::Error;
};

struct ImproperPosterior : NumericalError {
    using NumericalError::NumericalError;
};

struct SingularSystem : NumericalError {
    using NumericalError::NumericalError;
};

struct OracleDegenerate : NumericalError {
    using NumericalError::NumericalError;
};

// An internal invariant was violated (e.g. a_jk <= 0); indicates a bug
// or corrupted state rather than a user mistake.
struct InternalInvariant : NumericalError {
    using NumericalError::NumericalError;
};

}  // namespace bconcord
