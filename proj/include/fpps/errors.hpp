#pragma once

#include <stdexcept>
#include <string>

namespace fpps {

/// Base of every error the library throws. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Distribution parameters outside their admissible range, e.g. a Wishart
/// degrees-of-freedom constraint such as n + alpha > p + 2m + 2 (exit code 2).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

/// A matrix that must be SPD or invertible is not (exit code 4).
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Regressor matrix without full row rank, or a contrast without full row rank.
class RankError : public DegeneracyError {
public:
    using DegeneracyError::DegeneracyError;
};

inline int exit_code_for(const Error& e) {
    if (dynamic_cast<const DataError*>(&e) != nullptr) {
        return 3;
    }
    if (dynamic_cast<const DegeneracyError*>(&e) != nullptr) {
        return 4;
    }
    return 2;
}

}  // namespace fpps
