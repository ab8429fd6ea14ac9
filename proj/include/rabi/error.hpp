#pragma once

#include <stdexcept>
#include <string>

namespace rabi {

/// Invalid user-supplied configuration (bad ranges, missing fields, schema).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The truncated Fock space cannot represent the requested state or dynamics.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical corruption: non-real expectation values, step underflow.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physics audit (first law, truncation headroom) failed on a finished run.
class AuditError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rabi
