#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "llmfrac/corpus.hpp"
#include "llmfrac/date.hpp"

namespace llmfrac {

/// The two-stage prompt resources: stage 1 compresses a document into
/// bullet points, stage 2 expands the bullets back into full text. The
/// defaults are fixed byte-for-byte (tests pin their checksums) because any
/// drift silently changes the LLM training distribution.
struct PromptPair {
    std::string stage1;
    std::string stage2;
};

const PromptPair& default_prompts();

struct GenClientConfig {
    enum class Mode { mock, live };

    std::string endpoint_url;  // e.g. https://api.openai.com/v1/chat/completions
    std::string model_id = "gpt-3.5-turbo";
    std::string api_key_env_var = "LLMFRAC_API_KEY";
    int max_concurrent = 2;
    int requests_per_minute = 60;
    std::filesystem::path cache_dir;  // empty disables the response cache
    Mode mode = Mode::mock;
    PromptPair prompts = default_prompts();
};

/// Bullet-point compression of one source document.
struct Skeleton {
    std::string source_id;
    std::vector<std::string> bullets;  // >= 1, each non-empty
    Date source_date;                  // carried through so expand can restore it
};

/// Chat-completion transport. The HTTP implementation is the only place
/// that touches the network; tests substitute an in-process fake.
class Transport {
public:
    virtual ~Transport() = default;

    /// POSTs a chat request body (JSON) and returns the raw response body.
    /// Throws Error(transport_error) on connection failures and 5xx,
    /// Error(rate_limited) on 429.
    virtual std::string post_chat(const std::string& endpoint_url, const std::string& api_key,
                                  const std::string& request_body) = 0;
};

std::unique_ptr<Transport> make_http_transport();

struct GenFailure {
    std::string doc_id;
    std::string reason;
};

struct GenerationReport {
    std::vector<GenFailure> failures;
    std::size_t requests_sent = 0;
    std::size_t cache_hits = 0;
};

/// Two-stage parallel-corpus generator. Mock mode is pure and fully
/// deterministic (no sockets, no cache, no clock); live mode sends chat
/// requests through the transport with retry, token-bucket rate limiting
/// and an on-disk response cache keyed by (text, prompt, model_id).
class GenClient {
public:
    explicit GenClient(GenClientConfig config);

    /// Test hook: inject transport and sleep function (live mode).
    GenClient(GenClientConfig config, std::shared_ptr<Transport> transport,
              std::function<void(std::chrono::milliseconds)> sleeper);

    const GenClientConfig& config() const noexcept { return config_; }

    Skeleton skeletonize(const Document& doc);
    Document expand(const Skeleton& skeleton);

    /// skeletonize + expand over every doc, output order matching input.
    /// Per-doc failures are collected in the report; throws only when every
    /// doc fails.
    Corpus generate_parallel_corpus(const Corpus& corpus, GenerationReport* report = nullptr);

    /// Fixed word-substitution table the mock expander applies, so the mock
    /// LLM distribution measurably diverges from the human one.
    static const std::vector<std::pair<std::string, std::string>>& mock_substitutions();

    /// Fixed filler suffix the mock expander appends to each bullet.
    static const std::string& mock_filler();

private:
    struct State;
    GenClientConfig config_;
    std::shared_ptr<Transport> transport_;
    std::function<void(std::chrono::milliseconds)> sleeper_;
    std::shared_ptr<State> state_;

    std::string complete(const std::string& prompt, const std::string& payload,
                         std::size_t* cache_hits, std::size_t* requests);
    Skeleton mock_skeletonize(const Document& doc) const;
    Document mock_expand(const Skeleton& skeleton) const;
};

/// Parses bullet lines ("- x", "* x", "• x", "1. x", "2) x") out of a chat
/// response. Lines without a marker are ignored.
std::vector<std::string> parse_bullets(const std::string& response_text);

}  // namespace llmfrac
