#pragma once

#include <stdexcept>
#include <string>

namespace epiforge {

enum class ErrorKind {
    DimensionMismatch,
    InvalidDimension,
    NonPositivePopulation,
    NonFiniteState,
    NoConvergence,
    ShapeMismatch,
    TimestampMismatch,
    CadenceMismatch,
    ParseError,
    NonMonotonicDates,
    NegativeCount,
    InvalidSpec,
    ZeroPopulation,
    InvalidSplit,
    DivergedTraining,
    NonFiniteGradient,
    InvalidConfig,
    IoError,
    NotSupported,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::InvalidDimension: return "InvalidDimension";
        case ErrorKind::NonPositivePopulation: return "NonPositivePopulation";
        case ErrorKind::NonFiniteState: return "NonFiniteState";
        case ErrorKind::NoConvergence: return "NoConvergence";
        case ErrorKind::ShapeMismatch: return "ShapeMismatch";
        case ErrorKind::TimestampMismatch: return "TimestampMismatch";
        case ErrorKind::CadenceMismatch: return "CadenceMismatch";
        case ErrorKind::ParseError: return "ParseError";
        case ErrorKind::NonMonotonicDates: return "NonMonotonicDates";
        case ErrorKind::NegativeCount: return "NegativeCount";
        case ErrorKind::InvalidSpec: return "InvalidSpec";
        case ErrorKind::ZeroPopulation: return "ZeroPopulation";
        case ErrorKind::InvalidSplit: return "InvalidSplit";
        case ErrorKind::DivergedTraining: return "DivergedTraining";
        case ErrorKind::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorKind::InvalidConfig: return "InvalidConfig";
        case ErrorKind::IoError: return "IoError";
        case ErrorKind::NotSupported: return "NotSupported";
    }
    return "UnknownError";
}

/// Single exception type carrying a machine-checkable kind.
/// The CLI maps kinds onto process exit codes; tests match on kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace epiforge
