#pragma once

#include <stdexcept>
#include <string>

namespace flowplan {

/// A precondition or internal invariant was broken (bad index, undersized
/// sub-grid, inconsistent dimensions).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing, truncated or otherwise unreadable file.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A verification check failed; the message names the check.
class VerificationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const char* what) {
    if (!condition) [[unlikely]]
        throw ContractViolation(what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) [[unlikely]]
        throw ContractViolation(what);
}

} // namespace flowplan
