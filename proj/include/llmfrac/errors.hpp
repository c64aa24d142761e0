#pragma once

#include <stdexcept>
#include <string>

namespace llmfrac {

enum class Errc {
    file_not_found,
    io_error,
    empty_corpus,
    malformed_record,
    unknown_field,
    duplicate_meta_key,
    empty_vocabulary,
    too_few_documents,
    schema_version_mismatch,
    corrupt_model,
    flat_likelihood,
    insufficient_pool,
    train_test_overlap,
    holdout_after_cutoff,
    transport_error,
    rate_limited,
    empty_response,
    invalid_skeleton,
    missing_field,
    invalid_argument,
};

const char* errc_name(Errc code) noexcept;

/// Exception carrying a machine-readable error code alongside the message.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace llmfrac
