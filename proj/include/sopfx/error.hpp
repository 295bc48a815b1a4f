#pragma once

#include <stdexcept>
#include <string>

namespace sopfx {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad parameters, malformed formats or config values. The CLI maps this to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Input data violates an operation's precondition (non-finite value, empty series, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A pipeline stage ran but its self-check failed (divergence, non-convergence,
/// degenerate geometry). The CLI maps this to exit code 3.
class DiagnosticError : public Error {
public:
    using Error::Error;
};

} // namespace sopfx
