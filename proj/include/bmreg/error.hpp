#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bmreg {

enum class ErrorKind {
    InvalidArgument,
    UnsupportedDimension,
    Undersampled,
    CoverageError,
    UnsupportedOrder,
    BelowMean,
    InsufficientSamples,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::UnsupportedDimension: return "unsupported-dimension";
    case ErrorKind::Undersampled: return "undersampled";
    case ErrorKind::CoverageError: return "coverage-error";
    case ErrorKind::UnsupportedOrder: return "unsupported-order";
    case ErrorKind::BelowMean: return "below-mean";
    case ErrorKind::InsufficientSamples: return "insufficient-samples";
    }
    return "unknown";
}

/// Every library failure carries a machine-readable kind alongside the message.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) throw Error(kind, what);
}

} // namespace bmreg
