#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kseg {

enum class ErrorCode {
    Io,
    Format,
    DegenerateContour,
    OutOfBounds,
    Configuration,
    InitializationTooSmall,
    EmptyBand,
    IllPosedBand,
    InvalidNode,
    UnboundedFlow,
    Collapse,
    DimensionMismatch,
    UndefinedMetric,
    Validation,
    NotFound,
    NotReady,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the toolkit. The code is machine-readable and
/// ends up verbatim in CLI error records and service error documents.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string field_path = {})
        : std::runtime_error(message), code_(code), field_path_(std::move(field_path)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& field_path() const noexcept { return field_path_; }

private:
    ErrorCode code_;
    std::string field_path_;
};

}  // namespace kseg
