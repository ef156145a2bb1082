#pragma once

#include <stdexcept>
#include <string>

namespace wiener {

/// Base class for every error raised by the library. `exit_code()` maps the
/// failure onto the CLI's process exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

/// Invalid configuration or parameters (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

/// Unreadable, malformed or mismatched input data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

/// Non-finite values or broken numeric invariants (exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 4; }
};

} // namespace wiener
