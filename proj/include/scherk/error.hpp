#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scherk {

enum class ErrorCode {
    InvalidArgument,
    Parse,
    CenterNotEndpoint,
    DisjointnessViolated,
    EmptyGrid,
    NonConvex,
    NotNested,
    NotDecreasing,
    NonConvergence,
    NotAdmissible,
    NotStabilized,
    SandwichViolated,
    DisconnectedChain,
    NotClosed,
    NotOrdered,
    BoundaryMismatch,
    MeshFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Parse: return "Parse";
        case ErrorCode::CenterNotEndpoint: return "CenterNotEndpoint";
        case ErrorCode::DisjointnessViolated: return "DisjointnessViolated";
        case ErrorCode::EmptyGrid: return "EmptyGrid";
        case ErrorCode::NonConvex: return "NonConvex";
        case ErrorCode::NotNested: return "NotNested";
        case ErrorCode::NotDecreasing: return "NotDecreasing";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::NotAdmissible: return "NotAdmissible";
        case ErrorCode::NotStabilized: return "NotStabilized";
        case ErrorCode::SandwichViolated: return "SandwichViolated";
        case ErrorCode::DisconnectedChain: return "DisconnectedChain";
        case ErrorCode::NotClosed: return "NotClosed";
        case ErrorCode::NotOrdered: return "NotOrdered";
        case ErrorCode::BoundaryMismatch: return "BoundaryMismatch";
        case ErrorCode::MeshFailure: return "MeshFailure";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map outcomes to exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace scherk
