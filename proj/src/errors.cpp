#include "llmfrac/errors.hpp"

namespace llmfrac {

const char* errc_name(Errc code) noexcept {
    switch (code) {
        case Errc::file_not_found: return "FileNotFound";
        case Errc::io_error: return "IoError";
        case Errc::empty_corpus: return "EmptyCorpus";
        case Errc::malformed_record: return "MalformedRecord";
        case Errc::unknown_field: return "UnknownField";
        case Errc::duplicate_meta_key: return "DuplicateMetaKey";
        case Errc::empty_vocabulary: return "EmptyVocabulary";
        case Errc::too_few_documents: return "TooFewDocuments";
        case Errc::schema_version_mismatch: return "SchemaVersionMismatch";
        case Errc::corrupt_model: return "CorruptModel";
        case Errc::flat_likelihood: return "FlatLikelihood";
        case Errc::insufficient_pool: return "InsufficientPool";
        case Errc::train_test_overlap: return "TrainTestOverlap";
        case Errc::holdout_after_cutoff: return "HoldoutAfterCutoff";
        case Errc::transport_error: return "TransportError";
        case Errc::rate_limited: return "RateLimited";
        case Errc::empty_response: return "EmptyResponse";
        case Errc::invalid_skeleton: return "InvalidSkeleton";
        case Errc::missing_field: return "MissingField";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "UnknownError";
}

}  // namespace llmfrac
