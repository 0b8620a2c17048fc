#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pswitch {

enum class ErrorCode {
    ZeroVector,
    ZeroMatrix,
    NotDegenerate,
    Infeasible,
    NonConvergence,
    Reducible,
    BracketFailure,
    WrongTag,
    MissingTrajectory,
    BudgetInfeasible,
    ChoiceOutOfBracket,
    ClosureViolation,
    SigmaNotZero,
    ComplexDominant,
    NotHurwitz,
    DegenerateFacet,
    InvalidPolygon,
    InvalidArgument,
    Unsupported,
    Parse,
};

[[nodiscard]] constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::ZeroMatrix: return "ZeroMatrix";
        case ErrorCode::NotDegenerate: return "NotDegenerate";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::Reducible: return "Reducible";
        case ErrorCode::BracketFailure: return "BracketFailure";
        case ErrorCode::WrongTag: return "WrongTag";
        case ErrorCode::MissingTrajectory: return "MissingTrajectory";
        case ErrorCode::BudgetInfeasible: return "BudgetInfeasible";
        case ErrorCode::ChoiceOutOfBracket: return "ChoiceOutOfBracket";
        case ErrorCode::ClosureViolation: return "ClosureViolation";
        case ErrorCode::SigmaNotZero: return "SigmaNotZero";
        case ErrorCode::ComplexDominant: return "ComplexDominant";
        case ErrorCode::NotHurwitz: return "NotHurwitz";
        case ErrorCode::DegenerateFacet: return "DegenerateFacet";
        case ErrorCode::InvalidPolygon: return "InvalidPolygon";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Unsupported: return "Unsupported";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

/// Library failure carrying a machine-readable code next to the message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pswitch
