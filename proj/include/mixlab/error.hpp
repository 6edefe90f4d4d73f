#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixlab {

enum class ErrorKind {
    InvalidSize,
    Capacity,
    Validation,
    Reducible,
    DimensionMismatch,
    UnsupportedMode,
    HorizonExceeded,
    AbsoluteContinuity,
    NoConvergence,
    Precondition,
    Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace mixlab
