#pragma once

#include <stdexcept>
#include <string>

namespace ffm {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameter or configuration value (negative threshold, q > p, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data is malformed, inconsistent in shape, or too short.
class DataError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed (singular weight, eigen solver non-convergence).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Shorthand for the `k ≥ n−1` family of failures.
class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

} // namespace ffm
