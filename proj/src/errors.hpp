#pragma once

#include <stdexcept>
#include <string>

namespace irsuav {

enum class ErrorCode {
    BadParameter,
    InfeasibleInstance,
    SubproblemInfeasible,
    DegenerateGeometry,
    DegenerateExpansion,
    NonMonotone,
    UnknownKind,
    NumericalFailure,
    IoError,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::BadParameter: return "bad-parameter";
        case ErrorCode::InfeasibleInstance: return "infeasible";
        case ErrorCode::SubproblemInfeasible: return "subproblem-infeasible";
        case ErrorCode::DegenerateGeometry: return "degenerate-geometry";
        case ErrorCode::DegenerateExpansion: return "degenerate-expansion";
        case ErrorCode::NonMonotone: return "non-monotone";
        case ErrorCode::UnknownKind: return "unknown-kind";
        case ErrorCode::NumericalFailure: return "numerical-failure";
        case ErrorCode::IoError: return "io-error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

}  // namespace irsuav
