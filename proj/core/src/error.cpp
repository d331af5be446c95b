#include "rba/error.hpp"

namespace rba {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::kSchema: return "schema_error";
    case ErrorCode::kRow: return "row_error";
    case ErrorCode::kArgument: return "argument_error";
    case ErrorCode::kConfig: return "config_error";
    case ErrorCode::kTraining: return "training_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kUnconfigured: return "unconfigured";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kInternal: return "internal_error";
    }
    return "unknown_error";
}

} // namespace rba
