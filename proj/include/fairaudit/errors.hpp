#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace fairaudit {

// Coarse error classes. The CLI maps these onto process exit codes.
enum class ErrorKind : std::uint8_t {
    Input,       // malformed input, bad configuration, contract violation
    Degenerate,  // data are valid but the estimator is undefined on them
    Unstable,    // resampled statistic undefined too often
};

inline int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Input: return 2;
    case ErrorKind::Degenerate: return 3;
    case ErrorKind::Unstable: return 4;
    }
    return 1;
}

inline const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Unstable: return "unstable";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

class DomainError : public InputError {
public:
    using InputError::InputError;
};

class LengthMismatchError : public InputError {
public:
    using InputError::InputError;
};

class UnknownDimensionError : public InputError {
public:
    using InputError::InputError;
};

class MissingCellError : public InputError {
public:
    using InputError::InputError;
};

class InvalidModelError : public InputError {
public:
    using InputError::InputError;
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::Degenerate, what) {}
};

// All regression weights were zero.
class EmptyFitError : public DegenerateError {
public:
    using DegenerateError::DegenerateError;
};

// Implied threshold of exactly 0 or 1: the cost ratio is infinite or zero.
class UndefinedRatioError : public DegenerateError {
public:
    using DegenerateError::DegenerateError;
};

// A truth class (positives or negatives) is empty.
class DegenerateClassError : public DegenerateError {
public:
    using DegenerateError::DegenerateError;
};

// An error rate of 0 or 1 reached the SDT inversion uncorrected.
class DegenerateRateError : public DegenerateError {
public:
    using DegenerateError::DegenerateError;
};

struct WindowDiagnostics {
    double threshold = 0.0;
    double halfwidth = 0.0;
    std::size_t records_in_window = 0;
    double effective_n = 0.0;
};

class InsufficientDataError : public DegenerateError {
public:
    InsufficientDataError(const std::string& what, WindowDiagnostics diag)
        : DegenerateError(what), diagnostics_(diag) {}
    const WindowDiagnostics& diagnostics() const noexcept { return diagnostics_; }

private:
    WindowDiagnostics diagnostics_;
};

class UnstableStatisticError : public Error {
public:
    UnstableStatisticError(const std::string& what, double failure_fraction)
        : Error(ErrorKind::Unstable, what), failure_fraction_(failure_fraction) {}
    double failure_fraction() const noexcept { return failure_fraction_; }

private:
    double failure_fraction_;
};

}  // namespace fairaudit
