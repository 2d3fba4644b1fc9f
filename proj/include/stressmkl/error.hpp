#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stressmkl {

enum class ErrorKind {
    InvalidParameter,
    EmptyInput,
    DegenerateRange,
    InsufficientData,
    AmbiguousLabel,
    Unlabeled,
    AnnotationGap,
    InvalidScore,
    MissingClass,
    Shape,
    DegenerateGraph,
    ClusteringFailure,
    MissingProfile,
    IllConditioned,
    UnassignedDrive,
    Stratification,
    Schema,
    Io,
};

std::string_view to_string(ErrorKind kind);

/// Every library failure is reported through this type; `kind()` drives the
/// CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Raised by minmax_normalize on a flat trace; carries the constant value.
class DegenerateRangeError : public Error {
public:
    explicit DegenerateRangeError(double value);

    [[nodiscard]] double value() const noexcept { return value_; }

private:
    double value_;
};

/// Rethrows `Error` with `context` prefixed to the message, preserving the kind.
[[noreturn]] void rethrow_with_context(const Error& e, const std::string& context);

/// CLI exit code: 1 usage, 2 data, 3 numerical.
int exit_code_for(ErrorKind kind);

}  // namespace stressmkl
