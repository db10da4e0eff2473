#pragma once

#include <stdexcept>
#include <string>

namespace switching {

// Everything thrown by the library derives from Error so the CLI can catch
// one type at the boundary and turn it into an exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid model / grid / configuration input.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Intensity exponent exceeded the configured cap.
class OverflowError : public Error {
public:
    using Error::Error;
};

// Numerical scheme failed (sub-iteration stall, NaN, divergence guard).
class SolverError : public Error {
public:
    using Error::Error;
};

// Serialization / checkpoint problems (bad format, hash mismatch, ...).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace switching
