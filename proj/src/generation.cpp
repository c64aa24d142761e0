#include "llmfrac/generation.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>
#include <openssl/evp.h>

#include "llmfrac/errors.hpp"
#include "llmfrac/parallel.hpp"
#include "llmfrac/text.hpp"

namespace llmfrac {

using nlohmann::json;

const PromptPair& default_prompts() {
    static const PromptPair prompts{
        "The aim here is to reverse-engineer the author's writing process by taking a piece of "
        "text from a consumer complaint and compressing it into a more concise form. This process "
        "simulates how an author might distill their thoughts and key points into a structured, "
        "yet not overly condensed form. \n"
        "\n"
        "Now as a first step, given a complete piece of text from a consumer complaint, "
        "reverse-engineer it into a list of bullet points.",
        "Following the initial step of reverse-engineering the author's writing process by "
        "compressing a text segment from a consumer complaint, you now enter the second phase. "
        "Here, your objective is to expand upon the concise version previously crafted. This "
        "stage simulates how an author elaborates on the distilled thoughts and key points, "
        "enriching them into a detailed, structured narrative. \n"
        "\n"
        "Given the concise output from the previous step, your task is to develop it into a fully "
        "fleshed-out text."};
    return prompts;
}

const std::vector<std::pair<std::string, std::string>>& GenClient::mock_substitutions() {
    static const std::vector<std::pair<std::string, std::string>> table = {
        {"use", "utilize"},     {"help", "facilitate"},  {"show", "demonstrate"},
        {"start", "commence"},  {"end", "terminate"},    {"buy", "purchase"},
        {"need", "require"},    {"get", "obtain"},       {"ask", "request"},
        {"tell", "inform"},     {"fix", "rectify"},      {"big", "substantial"},
        {"fast", "rapid"},      {"try", "attempt"},      {"keep", "retain"},
        {"send", "transmit"},   {"call", "contact"},     {"pay", "remit"},
        {"wrong", "erroneous"}, {"also", "furthermore"},
    };
    return table;
}

const std::string& GenClient::mock_filler() {
    static const std::string filler = "in order to ensure a comprehensive resolution";
    return filler;
}

std::vector<std::string> parse_bullets(const std::string& response_text) {
    std::vector<std::string> bullets;
    std::istringstream lines(response_text);
    std::string line;
    auto trim = [](std::string_view s) {
        std::size_t b = 0, e = s.size();
        while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
        while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
        return std::string(s.substr(b, e - b));
    };
    while (std::getline(lines, line)) {
        std::string t = trim(line);
        std::size_t skip = 0;
        if (t.starts_with("- ") || t.starts_with("* ")) {
            skip = 2;
        } else if (t.starts_with("\xE2\x80\xA2")) {  // U+2022
            skip = 3;
        } else {
            std::size_t d = 0;
            while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
            if (d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')')) skip = d + 1;
        }
        if (skip == 0) continue;
        std::string bullet = trim(std::string_view(t).substr(skip));
        if (!bullet.empty()) bullets.push_back(std::move(bullet));
    }
    return bullets;
}

namespace {

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        raise(Errc::io_error, "sha256 digest failed");
    }
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string cache_key(const std::string& model_id, const std::string& prompt,
                      const std::string& text) {
    // length-prefixed concatenation, so field boundaries are unambiguous
    std::string blob;
    for (const std::string* part : {&model_id, &prompt, &text}) {
        blob += std::to_string(part->size());
        blob.push_back(':');
        blob += *part;
    }
    return sha256_hex(blob);
}

// Token bucket: capacity = requests_per_minute, refill rpm/60 per second.
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute)
        : capacity_(static_cast<double>(requests_per_minute)),
          per_second_(static_cast<double>(requests_per_minute) / 60.0),
          tokens_(static_cast<double>(requests_per_minute)),
          last_(std::chrono::steady_clock::now()) {}

    std::chrono::milliseconds acquire() {
        std::lock_guard<std::mutex> lock(mutex_);
        auto now = std::chrono::steady_clock::now();
        double elapsed = std::chrono::duration<double>(now - last_).count();
        last_ = now;
        tokens_ = std::min(capacity_, tokens_ + elapsed * per_second_);
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return std::chrono::milliseconds(0);
        }
        double wait_s = (1.0 - tokens_) / per_second_;
        tokens_ -= 1.0;
        return std::chrono::milliseconds(static_cast<long long>(wait_s * 1000.0) + 1);
    }

private:
    std::mutex mutex_;
    double capacity_;
    double per_second_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

}  // namespace

struct GenClient::State {
    explicit State(int rpm) : limiter(rpm) {}
    RateLimiter limiter;
    std::mutex cache_mutex;
    std::atomic<std::uint64_t> temp_counter{0};
};

GenClient::GenClient(GenClientConfig config)
    : GenClient(std::move(config), nullptr,
                [](std::chrono::milliseconds ms) { std::this_thread::sleep_for(ms); }) {}

GenClient::GenClient(GenClientConfig config, std::shared_ptr<Transport> transport,
                     std::function<void(std::chrono::milliseconds)> sleeper)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      state_(std::make_shared<State>(std::max(1, config_.requests_per_minute))) {
    if (config_.max_concurrent < 1) raise(Errc::invalid_argument, "max_concurrent must be >= 1");
    if (config_.requests_per_minute < 1) {
        raise(Errc::invalid_argument, "requests_per_minute must be >= 1");
    }
    if (config_.mode == GenClientConfig::Mode::live) {
        if (config_.endpoint_url.empty()) {
            raise(Errc::invalid_argument, "live mode needs endpoint_url");
        }
        const char* key = std::getenv(config_.api_key_env_var.c_str());
        if (!key || !*key) {
            raise(Errc::invalid_argument,
                  "live mode needs the API key in $" + config_.api_key_env_var);
        }
        if (!transport_) transport_ = make_http_transport();
    }
}

Skeleton GenClient::mock_skeletonize(const Document& doc) const {
    Skeleton s;
    s.source_id = doc.id;
    s.source_date = doc.date;
    for (const std::string& sentence : segment_sentences(doc.text)) {
        std::vector<std::string> toks = tokenize(sentence);
        if (toks.empty()) continue;
        std::string bullet;
        for (std::size_t i = 0; i < std::min<std::size_t>(5, toks.size()); ++i) {
            if (i) bullet.push_back(' ');
            bullet += toks[i];
        }
        s.bullets.push_back(std::move(bullet));
    }
    if (s.bullets.empty()) {
        raise(Errc::empty_response, "doc \"" + doc.id + "\" yields no bullets");
    }
    return s;
}

Document GenClient::mock_expand(const Skeleton& skeleton) const {
    const auto& table = mock_substitutions();
    auto substitute = [&](const std::string& word) -> const std::string& {
        for (const auto& [from, to] : table) {
            if (word == from) return to;
        }
        return word;
    };

    std::string text;
    for (std::size_t i = 0; i < skeleton.bullets.size(); ++i) {
        if (i) text += ". ";
        std::istringstream words(skeleton.bullets[i]);
        std::string w;
        bool first = true;
        while (words >> w) {
            if (!first) text.push_back(' ');
            text += substitute(w);
            first = false;
        }
        text.push_back(' ');
        text += mock_filler();
    }
    text.push_back('.');

    Document out;
    out.id = skeleton.source_id + "#llm";
    out.date = skeleton.source_date;
    out.text = std::move(text);
    out.meta["generator"] = config_.model_id;
    return out;
}

std::string GenClient::complete(const std::string& prompt, const std::string& payload,
                                std::size_t* cache_hits, std::size_t* requests) {
    const bool use_cache = !config_.cache_dir.empty();
    std::filesystem::path cache_path;
    if (use_cache) {
        cache_path = config_.cache_dir / (cache_key(config_.model_id, prompt, payload) + ".json");
        std::lock_guard<std::mutex> lock(state_->cache_mutex);
        std::ifstream in(cache_path);
        if (in) {
            json j = json::parse(in, nullptr, false);
            if (!j.is_discarded() && j.contains("response") && j["response"].is_string()) {
                if (cache_hits) ++*cache_hits;
                return j["response"].get<std::string>();
            }
        }
    }

    json body{{"model", config_.model_id},
              {"messages", json::array({json{{"role", "user"},
                                             {"content", prompt + "\n\n" + payload}}})}};
    const std::string request = body.dump();
    const char* key_env = std::getenv(config_.api_key_env_var.c_str());
    const std::string api_key = key_env ? key_env : "";

    constexpr int kMaxRetries = 5;
    std::string response_body;
    for (int attempt = 0;; ++attempt) {
        auto wait = state_->limiter.acquire();
        if (wait.count() > 0) sleeper_(wait);
        try {
            if (requests) ++*requests;
            response_body = transport_->post_chat(config_.endpoint_url, api_key, request);
            break;
        } catch (const Error& e) {
            if ((e.code() != Errc::transport_error && e.code() != Errc::rate_limited) ||
                attempt >= kMaxRetries) {
                throw;
            }
            sleeper_(std::chrono::milliseconds(500LL << attempt));
        }
    }

    json j = json::parse(response_body, nullptr, false);
    if (j.is_discarded()) raise(Errc::transport_error, "response is not valid JSON");
    std::string content;
    try {
        content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception&) {
        raise(Errc::transport_error, "response has no choices[0].message.content");
    }
    if (content.empty()) raise(Errc::empty_response, "model returned empty content");

    if (use_cache) {
        std::error_code ec;
        std::filesystem::create_directories(config_.cache_dir, ec);
        std::filesystem::path tmp =
            cache_path.string() + ".tmp" + std::to_string(state_->temp_counter.fetch_add(1));
        {
            std::ofstream out(tmp);
            out << json{{"response", content}}.dump() << '\n';
        }
        std::lock_guard<std::mutex> lock(state_->cache_mutex);
        std::filesystem::rename(tmp, cache_path, ec);
    }
    return content;
}

Skeleton GenClient::skeletonize(const Document& doc) {
    if (doc.text.empty()) raise(Errc::invalid_argument, "doc \"" + doc.id + "\" has empty text");
    if (config_.mode == GenClientConfig::Mode::mock) return mock_skeletonize(doc);

    std::string content = complete(config_.prompts.stage1, doc.text, nullptr, nullptr);
    Skeleton s;
    s.source_id = doc.id;
    s.source_date = doc.date;
    s.bullets = parse_bullets(content);
    if (s.bullets.empty()) {
        raise(Errc::empty_response, "doc \"" + doc.id + "\": response had no bullet lines");
    }
    return s;
}

Document GenClient::expand(const Skeleton& skeleton) {
    if (skeleton.bullets.empty()) {
        raise(Errc::invalid_skeleton, "skeleton for \"" + skeleton.source_id + "\" has no bullets");
    }
    for (const std::string& b : skeleton.bullets) {
        if (b.empty()) {
            raise(Errc::invalid_skeleton,
                  "skeleton for \"" + skeleton.source_id + "\" has an empty bullet");
        }
    }
    if (config_.mode == GenClientConfig::Mode::mock) return mock_expand(skeleton);

    std::string payload;
    for (const std::string& b : skeleton.bullets) {
        payload += "- ";
        payload += b;
        payload.push_back('\n');
    }
    std::string content = complete(config_.prompts.stage2, payload, nullptr, nullptr);

    Document out;
    out.id = skeleton.source_id + "#llm";
    out.date = skeleton.source_date;
    out.text = std::move(content);
    out.meta["generator"] = config_.model_id;
    return out;
}

Corpus GenClient::generate_parallel_corpus(const Corpus& corpus, GenerationReport* report) {
    if (corpus.empty()) raise(Errc::empty_corpus, "generate_parallel_corpus on an empty corpus");

    struct Slot {
        bool ok = false;
        Document doc;
        std::string reason;
        std::size_t cache_hits = 0;
        std::size_t requests = 0;
    };
    std::vector<Slot> slots(corpus.size());

    auto run_one = [&](std::size_t i) {
        Slot& slot = slots[i];
        try {
            const Document& src = corpus.docs[i];
            Skeleton skel;
            if (config_.mode == GenClientConfig::Mode::mock) {
                skel = mock_skeletonize(src);
                slot.doc = mock_expand(skel);
            } else {
                std::string content =
                    complete(config_.prompts.stage1, src.text, &slot.cache_hits, &slot.requests);
                skel.source_id = src.id;
                skel.source_date = src.date;
                skel.bullets = parse_bullets(content);
                if (skel.bullets.empty()) {
                    raise(Errc::empty_response,
                          "doc \"" + src.id + "\": response had no bullet lines");
                }
                std::string payload;
                for (const std::string& b : skel.bullets) {
                    payload += "- ";
                    payload += b;
                    payload.push_back('\n');
                }
                std::string text =
                    complete(config_.prompts.stage2, payload, &slot.cache_hits, &slot.requests);
                slot.doc.id = src.id + "#llm";
                slot.doc.date = src.date;
                slot.doc.text = std::move(text);
                slot.doc.meta["generator"] = config_.model_id;
            }
            slot.ok = true;
        } catch (const Error& e) {
            slot.reason = e.what();
        }
    };

    if (config_.mode == GenClientConfig::Mode::live && config_.max_concurrent > 1) {
        unsigned saved = worker_threads();
        set_worker_threads(static_cast<unsigned>(config_.max_concurrent));
        parallel_for(corpus.size(), run_one);
        set_worker_threads(saved);
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i) run_one(i);
    }

    Corpus out;
    out.source_label = corpus.source_label + "#llm";
    GenerationReport local;
    GenerationReport& rep = report ? *report : local;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        Slot& slot = slots[i];
        rep.cache_hits += slot.cache_hits;
        rep.requests_sent += slot.requests;
        if (slot.ok) {
            out.docs.push_back(std::move(slot.doc));
        } else {
            rep.failures.push_back({corpus.docs[i].id, slot.reason});
        }
    }
    if (out.docs.empty()) {
        raise(Errc::empty_corpus, "all " + std::to_string(corpus.size()) +
                                      " documents failed; first: " + rep.failures.front().reason);
    }
    return out;
}

}  // namespace llmfrac
