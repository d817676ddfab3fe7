#pragma once

#include <stdexcept>
#include <string>

namespace echonle {

// Every recoverable failure in the library is thrown as Error with a Kind.
// Kinds group into three categories used by the CLI exit codes:
//   input errors (bad files, bad schemas)            -> exit 1
//   computation errors (degenerate geometry, limits) -> exit 2
//   endpoint errors (network / remote model)         -> exit 3
enum class ErrorKind {
    // input / parsing
    IoFailure,
    MalformedRow,
    EmptyInput,
    SchemaError,
    BadMagic,
    TruncatedData,
    UnknownAttributeKey,
    EmptyTemplatePool,
    EmptyExemplars,
    EmptyText,
    RegistryMismatch,
    // computation / geometry
    DegenerateAxis,
    SelfIntersecting,
    DegenerateContour,
    InvariantViolation,
    NonPositiveWidth,
    NonPositiveEDV,
    Collinear,
    PointCountMismatch,
    InvalidSector,
    EmptySector,
    EmptyRegion,
    OutOfBounds,
    NoFinalAnswer,
    UnknownOption,
    // endpoint
    Timeout,
    HttpStatus,
    MalformedResponse,
    AuthMissing,
    NetworkDisabled,
};

inline const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::IoFailure: return "IoFailure";
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::EmptyInput: return "EmptyInput";
        case ErrorKind::SchemaError: return "SchemaError";
        case ErrorKind::BadMagic: return "BadMagic";
        case ErrorKind::TruncatedData: return "TruncatedData";
        case ErrorKind::UnknownAttributeKey: return "UnknownAttributeKey";
        case ErrorKind::EmptyTemplatePool: return "EmptyTemplatePool";
        case ErrorKind::EmptyExemplars: return "EmptyExemplars";
        case ErrorKind::EmptyText: return "EmptyText";
        case ErrorKind::RegistryMismatch: return "RegistryMismatch";
        case ErrorKind::DegenerateAxis: return "DegenerateAxis";
        case ErrorKind::SelfIntersecting: return "SelfIntersecting";
        case ErrorKind::DegenerateContour: return "DegenerateContour";
        case ErrorKind::InvariantViolation: return "InvariantViolation";
        case ErrorKind::NonPositiveWidth: return "NonPositiveWidth";
        case ErrorKind::NonPositiveEDV: return "NonPositiveEDV";
        case ErrorKind::Collinear: return "Collinear";
        case ErrorKind::PointCountMismatch: return "PointCountMismatch";
        case ErrorKind::InvalidSector: return "InvalidSector";
        case ErrorKind::EmptySector: return "EmptySector";
        case ErrorKind::EmptyRegion: return "EmptyRegion";
        case ErrorKind::OutOfBounds: return "OutOfBounds";
        case ErrorKind::NoFinalAnswer: return "NoFinalAnswer";
        case ErrorKind::UnknownOption: return "UnknownOption";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::HttpStatus: return "HttpStatus";
        case ErrorKind::MalformedResponse: return "MalformedResponse";
        case ErrorKind::AuthMissing: return "AuthMissing";
        case ErrorKind::NetworkDisabled: return "NetworkDisabled";
    }
    return "Error";
}

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

// Exit-code category for the CLI: 1 = input, 2 = computation, 3 = endpoint.
inline int error_exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::IoFailure:
        case ErrorKind::MalformedRow:
        case ErrorKind::EmptyInput:
        case ErrorKind::SchemaError:
        case ErrorKind::BadMagic:
        case ErrorKind::TruncatedData:
        case ErrorKind::UnknownAttributeKey:
        case ErrorKind::EmptyTemplatePool:
        case ErrorKind::EmptyExemplars:
        case ErrorKind::EmptyText:
        case ErrorKind::RegistryMismatch:
            return 1;
        case ErrorKind::Timeout:
        case ErrorKind::HttpStatus:
        case ErrorKind::MalformedResponse:
        case ErrorKind::AuthMissing:
        case ErrorKind::NetworkDisabled:
            return 3;
        default:
            return 2;
    }
}

}  // namespace echonle
