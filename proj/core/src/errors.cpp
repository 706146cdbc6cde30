#include "ctirag/errors.hpp"

namespace ctirag {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_params: return "InvalidParams";
    case ErrorCode::network_error: return "NetworkError";
    case ErrorCode::rate_limited: return "RateLimited";
    case ErrorCode::malformed_response: return "MalformedResponse";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::embedding_failure: return "EmbeddingFailure";
    case ErrorCode::store_io: return "StoreIo";
    case ErrorCode::version_mismatch: return "VersionMismatch";
    case ErrorCode::corrupt_store: return "CorruptStore";
    case ErrorCode::empty_store: return "EmptyStore";
    case ErrorCode::missing_binding: return "MissingBinding";
    case ErrorCode::unknown_placeholder: return "UnknownPlaceholder";
    case ErrorCode::backend_unavailable: return "BackendUnavailable";
    case ErrorCode::context_overflow: return "ContextOverflow";
    case ErrorCode::template_checksum_mismatch: return "TemplateChecksumMismatch";
    case ErrorCode::budget_unsatisfiable: return "BudgetUnsatisfiable";
    case ErrorCode::pipeline_error: return "PipelineError";
    case ErrorCode::unparseable_rating: return "UnparseableRating";
    case ErrorCode::mixed_keys: return "MixedKeys";
    case ErrorCode::empty_input: return "EmptyInput";
    }
    return "UnknownError";
}

Error::Error(ErrorCode code, std::string message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

} // namespace ctirag
