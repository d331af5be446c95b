#pragma once

#include <stdexcept>
#include <string>

namespace rba {

enum class ErrorCode {
    kSchema,        // malformed input schema (missing/unknown CSV column, bad header)
    kRow,           // unparseable row content (strict mode)
    kArgument,      // invalid argument to an operation
    kConfig,        // inconsistent or missing configuration
    kTraining,      // not enough data to fit a model
    kNotFound,      // unknown request id, missing resource
    kConflict,      // duplicate confirm, idempotency violation
    kUnconfigured,  // service not ready to answer
    kIo,            // stream read/write failure
    kInternal,      // broken invariant
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string field = {})
        : std::runtime_error(std::move(message)), code_(code), field_(std::move(field)) {}

    ErrorCode code() const { return code_; }
    const std::string& field() const { return field_; }

private:
    ErrorCode code_;
    std::string field_;
};

} // namespace rba
