#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace spinecurve {

enum class ErrorCode {
    TooFewPoints,
    DegenerateAbscissae,
    NonFiniteInput,
    InvalidArgument,
    MalformedJson,
    SchemaViolation,
    InvariantViolation,
    MalformedCsv,
    NonNumericAngle,
    NoGroundTruth,
    EmptyInput,
    LengthMismatch,
    ConstantSeries,
    InvalidConfig,
    UnreachableTarget,
    IoFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateAbscissae: return "DegenerateAbscissae";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedJson: return "MalformedJson";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::MalformedCsv: return "MalformedCsv";
    case ErrorCode::NonNumericAngle: return "NonNumericAngle";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConstantSeries: return "ConstantSeries";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnreachableTarget: return "UnreachableTarget";
    case ErrorCode::IoFailure: return "IoFailure";
    }
    return "Unknown";
}

/// Exception carrying a stable error code. The code string is what ends up
/// in result files (`"error":"TooFewPoints"`); the message is for humans.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message)
        , code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace spinecurve
