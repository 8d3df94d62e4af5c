#pragma once

#include <stdexcept>
#include <string>

namespace ccs {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition: shape mismatch, empty input, out-of-range parameter.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable input data (CSV/UCR parsing, missing files).
class DataError : public Error {
public:
    using Error::Error;
};

/// A computation could not produce a finite result.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A cross-sample kernel sum fell below the positive floor, i.e. the two
/// sample sets have (numerically) disjoint support under the chosen width.
class DisjointSupport : public NumericalError {
public:
    using NumericalError::NumericalError;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition) {
        throw InvalidArgument(message);
    }
}

} // namespace detail
} // namespace ccs
