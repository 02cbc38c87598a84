#include "bidforge/error.hpp"

namespace bidforge {

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Io: return "IoError";
        case ErrorKind::Parse: return "ParseError";
        case ErrorKind::Validation: return "ValidationError";
        case ErrorKind::EmptyDataset: return "EmptyDataset";
        case ErrorKind::MissingNegative: return "MissingNegative";
        case ErrorKind::EmptyText: return "EmptyText";
        case ErrorKind::MarkerInText: return "MarkerInText";
        case ErrorKind::ReservedText: return "ReservedText";
        case ErrorKind::Backend: return "BackendError";
        case ErrorKind::RateLimited: return "RateLimited";
        case ErrorKind::Timeout: return "Timeout";
        case ErrorKind::MissingLogprobs: return "MissingLogprobs";
        case ErrorKind::InvalidDataset: return "InvalidDataset";
        case ErrorKind::EmptyCompletion: return "EmptyCompletion";
        case ErrorKind::Precondition: return "PreconditionViolation";
        case ErrorKind::BudgetExhausted: return "BudgetExhausted";
        case ErrorKind::MissingSection: return "MissingSection";
        case ErrorKind::OutOfOrder: return "OutOfOrder";
        case ErrorKind::MissingVerdict: return "MissingVerdict";
        case ErrorKind::Format: return "FormatError";
        case ErrorKind::DimensionMismatch: return "DimensionMismatch";
        case ErrorKind::DocumentEmpty: return "DocumentEmpty";
        case ErrorKind::DocumentTooLarge: return "DocumentTooLarge";
        case ErrorKind::SolverFailure: return "SolverFailure";
        case ErrorKind::SampleNotInPool: return "SampleNotInPool";
        case ErrorKind::Config: return "ConfigError";
        case ErrorKind::Schema: return "SchemaError";
        case ErrorKind::UnknownConcept: return "UnknownConcept";
        case ErrorKind::Usage: return "UsageError";
    }
    return "Error";
}

std::string error_line(const Error& error) {
    return std::string(error_kind_name(error.kind())) + ": " + error.what();
}

}  // namespace bidforge
