#pragma once

#include <stdexcept>
#include <string>

namespace snecl {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition or configuration invariant was violated by the caller.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A computation produced a non-finite value (divergence, log of zero, ...).
class NumericError : public Error {
public:
    using Error::Error;
};

/// A file could not be read, written or parsed.
class FormatError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& message) {
    if (!cond) throw ValidationError(message);
}

} // namespace detail
} // namespace snecl
