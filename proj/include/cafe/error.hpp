#pragma once

// Exception hierarchy. The CLI maps each family onto a stable exit code.

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cafe {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration content: spec files, analysis configs, harness configs, flags.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Filesystem failures (missing input, unwritable output).
class IoError : public Error {
public:
    using Error::Error;
};

/// Dataset content that violates the record schema or its invariants.
class ValidationError : public Error {
public:
    ValidationError(std::size_t row, const std::string& what)
        : Error(row == 0 ? what : "row " + std::to_string(row) + ": " + what), row_(row) {}

    /// 1-based line number in the source file; 0 when not tied to a row.
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

class ParseError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DuplicateKeyError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Records that carry the unevaluated-signals marker where signals are required.
class UnevaluatedError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Regression systems that cannot be solved.
class FitError : public Error {
public:
    using Error::Error;
};

class UnderDeterminedError : public FitError {
public:
    using FitError::FitError;
};

class SingularError : public FitError {
public:
    using FitError::FitError;
};

/// Inverse solves that hit a non-finite objective or gradient.
class SolverError : public Error {
public:
    using Error::Error;
};

}  // namespace cafe
