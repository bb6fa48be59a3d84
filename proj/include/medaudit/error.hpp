#pragma once

#include <stdexcept>
#include <string>

namespace medaudit {

enum class ErrorKind {
    InvalidArgument,
    EmptyGroup,
    DegenerateOutcome,
    TooFewUnits,
    CyclicGraph,
    RoleViolation,
    MissingRequiredEdge,
    NonFiniteInput,
    EmptyPool,
    DomainError,
    SchemaMismatch,
    EmptyCohort,
    DegenerateAllocation,
    Io,
};

const char* to_string(ErrorKind kind);

// All library failures surface as this exception; `kind()` is what callers
// (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::EmptyGroup: return "EmptyGroup";
        case ErrorKind::DegenerateOutcome: return "DegenerateOutcome";
        case ErrorKind::TooFewUnits: return "TooFewUnits";
        case ErrorKind::CyclicGraph: return "CyclicGraph";
        case ErrorKind::RoleViolation: return "RoleViolation";
        case ErrorKind::MissingRequiredEdge: return "MissingRequiredEdge";
        case ErrorKind::NonFiniteInput: return "NonFiniteInput";
        case ErrorKind::EmptyPool: return "EmptyPool";
        case ErrorKind::DomainError: return "DomainError";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::EmptyCohort: return "EmptyCohort";
        case ErrorKind::DegenerateAllocation: return "DegenerateAllocation";
        case ErrorKind::Io: return "Io";
    }
    return "Unknown";
}

}  // namespace medaudit
