// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace compvol {

/// Base of every error thrown by the library. Each subclass maps to one
/// failure class so callers (the CLI in particular) can report them apart.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {      // invalid configuration or dimensions
public:
    using Error::Error;
};

class UsageError : public Error {       // precondition violated by the caller
public:
    using Error::Error;
};

class BoundsError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {      // value outside the mathematical domain
public:
    using Error::Error;
};

class NumericError : public Error {     // non-finite values
public:
    using Error::Error;
};

class PoseError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {      // malformed file / container
public:
    using Error::Error;
};

class AllocationError : public Error {
public:
    AllocationError(const std::string& what, std::size_t bytes)
        : Error(what), required_bytes_(bytes) {}
    std::size_t required_bytes() const noexcept { return required_bytes_; }

private:
    std::size_t required_bytes_;
};

}  // namespace compvol
