#pragma once

#include <stdexcept>
#include <string>

namespace ctirag {

// Error taxonomy shared across the library. Every failure surfaced to a
// caller carries one of these codes so CLI/service layers can map it to an
// exit code or HTTP status without string matching.
enum class ErrorCode {
    invalid_params,
    // intel
    network_error,
    rate_limited,
    malformed_response,
    // knowledge base
    dimension_mismatch,
    zero_vector,
    embedding_failure,
    store_io,
    version_mismatch,
    corrupt_store,
    empty_store,
    // gateway / prompts
    missing_binding,
    unknown_placeholder,
    backend_unavailable,
    context_overflow,
    template_checksum_mismatch,
    // pipeline
    budget_unsatisfiable,
    pipeline_error,
    // evaluation
    unparseable_rating,
    mixed_keys,
    empty_input,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

} // namespace ctirag
