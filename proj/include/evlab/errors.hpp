#pragma once

#include <stdexcept>
#include <string>

namespace evlab {

enum class ErrorCode {
    Configuration,
    EscapedState,
    EscapeDominates,
    InfeasibleThreshold,
    InsufficientData,
    NonFiniteInput,
    DegenerateSample,
    NonConvergence,
    SupportViolation,
    ZeroDistance,
    EpsilonRequired,
    NotPeriodic,
    TruncationTooSmall,
    TooFewExceedances,
    AllRealizationsFailed,
    SchemaError,
    RangeError,
    IoError,
};

inline const char* error_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::Configuration: return "Configuration";
        case ErrorCode::EscapedState: return "EscapedState";
        case ErrorCode::EscapeDominates: return "EscapeDominates";
        case ErrorCode::InfeasibleThreshold: return "InfeasibleThreshold";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::NonFiniteInput: return "NonFiniteInput";
        case ErrorCode::DegenerateSample: return "DegenerateSample";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::SupportViolation: return "SupportViolation";
        case ErrorCode::ZeroDistance: return "ZeroDistance";
        case ErrorCode::EpsilonRequired: return "EpsilonRequired";
        case ErrorCode::NotPeriodic: return "NotPeriodic";
        case ErrorCode::TruncationTooSmall: return "TruncationTooSmall";
        case ErrorCode::TooFewExceedances: return "TooFewExceedances";
        case ErrorCode::AllRealizationsFailed: return "AllRealizationsFailed";
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::RangeError: return "RangeError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace evlab
