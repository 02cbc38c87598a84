#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bidforge {

// Machine-parsable failure categories. The CLI prints the category name as
// the first token of its single error line.
enum class ErrorKind {
    Io,
    Parse,
    Validation,
    EmptyDataset,
    MissingNegative,
    EmptyText,
    MarkerInText,
    ReservedText,
    Backend,
    RateLimited,
    Timeout,
    MissingLogprobs,
    InvalidDataset,
    EmptyCompletion,
    Precondition,
    BudgetExhausted,
    MissingSection,
    OutOfOrder,
    MissingVerdict,
    Format,
    DimensionMismatch,
    DocumentEmpty,
    DocumentTooLarge,
    SolverFailure,
    SampleNotInPool,
    Config,
    Schema,
    UnknownConcept,
    Usage,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

class Error;

// "<Category>: message", the form used in logs, manifests and CLI output.
std::string error_line(const Error& error);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Parse failures carry the 1-based line of the offending input (0 if unknown).
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(ErrorKind::Parse, message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Embedding file failures carry the byte offset where decoding stopped.
class FormatError : public Error {
public:
    FormatError(const std::string& message, std::size_t offset)
        : Error(ErrorKind::Format, message), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace bidforge
