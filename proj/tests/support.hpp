#pragma once

// Shared test fixtures: an independent grid-search oracle for the mixture
// likelihood, planted-model builders, and synthetic corpus generators. The
// oracle deliberately avoids the library's kernels and optimizer; it uses
// the direct closed-form likelihood with <cmath> only.

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "llmfrac/corpus.hpp"
#include "llmfrac/estimator.hpp"
#include "llmfrac/generation.hpp"
#include "llmfrac/model.hpp"
#include "llmfrac/rng.hpp"

namespace testsup {

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("llmfrac_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

// L(alpha) = sum_d log((1-alpha) e^{a_d} + alpha e^{b_d}), computed directly.
// Only suitable for small |a|, |b| (no log-space tricks on purpose).
inline double oracle_loglik(const std::vector<double>& a, const std::vector<double>& b,
                            double alpha) {
    double total = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        total += std::log((1.0 - alpha) * std::exp(a[d]) + alpha * std::exp(b[d]));
    }
    return total;
}

// Brute-force maximizer over the 1e-4 grid {0, 1e-4, ..., 1}; lowest alpha
// wins ties.
inline double oracle_grid_argmax(const std::vector<double>& a, const std::vector<double>& b) {
    double best_alpha = 0.0;
    double best = oracle_loglik(a, b, 0.0);
    for (int i = 1; i <= 10000; ++i) {
        double alpha = static_cast<double>(i) * 1e-4;
        double value = oracle_loglik(a, b, alpha);
        if (value > best) {
            best = value;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

// Dense per-unit log-likelihoods from raw probabilities and occurrence bits,
// independent of the library's sparse scoring path.
inline std::pair<double, double> oracle_unit_loglik(const std::vector<double>& p,
                                                    const std::vector<double>& q,
                                                    const std::vector<bool>& bits) {
    double a = 0.0, b = 0.0;
    for (std::size_t t = 0; t < p.size(); ++t) {
        a += bits[t] ? std::log(p[t]) : std::log(1.0 - p[t]);
        b += bits[t] ? std::log(q[t]) : std::log(1.0 - q[t]);
    }
    return {a, b};
}

// ---------------------------------------------------------------------------
// Planted models and synthetic corpora

inline std::vector<std::string> numbered_tokens(std::size_t n) {
    std::vector<std::string> tokens;
    tokens.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "w%03zu", i);
        tokens.emplace_back(buf);
    }
    return tokens;
}

// Well-separated planted model: p ramps up across slots while q ramps down.
inline llmfrac::TokenModel planted_model(std::size_t vocab_size = 50) {
    std::vector<double> p(vocab_size), q(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        double f = vocab_size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(vocab_size - 1);
        p[i] = 0.15 + 0.70 * f;
        q[i] = 0.85 - 0.70 * f;
    }
    llmfrac::FitConfig cfg;
    cfg.min_docs = 2;
    llmfrac::ModelProvenance prov;
    prov.human_label = "planted-human";
    prov.llm_label = "planted-llm";
    return llmfrac::TokenModel(llmfrac::Vocabulary::from_tokens(numbered_tokens(vocab_size)),
                               std::move(p), std::move(q), cfg, std::move(prov));
}

// Weakly separated variant: per-token gaps are small and alternate sign, so
// single units cannot be classified and only population-level inference
// works. This is the statistically interesting regime.
inline llmfrac::TokenModel weak_planted_model(std::size_t vocab_size = 40, double gap = 0.08) {
    std::vector<double> p(vocab_size), q(vocab_size);
    for (std::size_t i = 0; i < vocab_size; ++i) {
        double f = vocab_size == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(vocab_size - 1);
        p[i] = 0.20 + 0.50 * f;
        q[i] = p[i] + (i % 2 == 0 ? gap : -gap);
    }
    llmfrac::FitConfig cfg;
    cfg.min_docs = 2;
    llmfrac::ModelProvenance prov;
    prov.human_label = "weak-human";
    prov.llm_label = "weak-llm";
    return llmfrac::TokenModel(llmfrac::Vocabulary::from_tokens(numbered_tokens(vocab_size)),
                               std::move(p), std::move(q), cfg, std::move(prov));
}

// One unit drawn from Bernoulli occurrence probabilities: the text contains
// each present token exactly once.
inline std::string synth_unit_text(const std::vector<std::string>& tokens,
                                   const std::vector<double>& probs, llmfrac::SplitMix64& rng) {
    std::string text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
        double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        if (u < probs[t]) {
            if (!text.empty()) text.push_back(' ');
            text += tokens[t];
        }
    }
    if (text.empty()) text = "zzznone";  // outside the vocabulary
    return text;
}

// Corpus of n docs where each doc is LLM (drawn from q) with probability
// alpha, human (drawn from p) otherwise.
inline llmfrac::Corpus synth_mixture_corpus(const llmfrac::TokenModel& model, double alpha,
                                            std::size_t n, std::uint64_t seed,
                                            const std::string& id_prefix = "doc",
                                            llmfrac::Date date = {2023, 6, 15}) {
    llmfrac::SplitMix64 rng(seed);
    llmfrac::Corpus corpus;
    corpus.source_label = "synthetic";
    for (std::size_t i = 0; i < n; ++i) {
        double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        bool llm = u < alpha;
        llmfrac::Document doc;
        doc.id = id_prefix + std::to_string(i);
        doc.date = date;
        doc.text = synth_unit_text(model.vocab().tokens(), llm ? model.q() : model.p(), rng);
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

// Corpus with an exact count of LLM docs (positions chosen by seed).
inline llmfrac::Corpus synth_exact_mixture_corpus(const llmfrac::TokenModel& model,
                                                  std::size_t n_llm, std::size_t n,
                                                  std::uint64_t seed,
                                                  const std::string& id_prefix = "doc") {
    llmfrac::SplitMix64 rng(seed);
    std::vector<bool> is_llm(n, false);
    for (std::size_t i = 0; i < n_llm; ++i) is_llm[i] = true;
    llmfrac::shuffle(is_llm, rng);
    llmfrac::Corpus corpus;
    corpus.source_label = "synthetic-exact";
    for (std::size_t i = 0; i < n; ++i) {
        llmfrac::Document doc;
        doc.id = id_prefix + std::to_string(i);
        doc.date = {2023, 6, 15};
        doc.text = synth_unit_text(model.vocab().tokens(), is_llm[i] ? model.q() : model.p(), rng);
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Prose-style generator for the mock generation pipeline. The word list
// overlaps both the mock substitution targets and the mock filler words at
// low rates, so a fitted vocabulary keeps the discriminative tokens.

struct WeightedWord {
    std::string word;
    double weight;
};

inline const std::vector<WeightedWord>& prose_words() {
    static const std::vector<WeightedWord> words = [] {
        std::vector<WeightedWord> w;
        // substitution sources: common in human prose
        for (const auto& [from, to] : llmfrac::GenClient::mock_substitutions()) {
            w.push_back({from, 1.5});
            w.push_back({to, 0.08});  // targets: rare but present in human text
        }
        for (const char* f : {"order", "ensure", "comprehensive", "resolution"}) {
            w.push_back({f, 0.40});
        }
        static const char* kNeutral[] = {
            "the",     "and",    "of",      "was",     "is",      "for",     "on",
            "with",    "at",     "by",      "this",    "that",    "it",      "as",
            "be",      "are",    "from",    "or",      "an",      "but",     "not",
            "have",    "has",    "had",     "they",    "their",   "we",      "our",
            "you",     "your",   "account", "company", "service", "issue",   "problem",
            "report",  "charge", "credit",  "money",   "bank",    "letter",  "time",
            "month",   "day",    "refund",  "balance", "card",    "loan",    "agent",
            "office",  "number", "record",  "notice",  "claim",   "dispute", "matter",
            "in",      "to",     "a",       "response"};
        for (std::size_t i = 0; i < std::size(kNeutral); ++i) {
            w.push_back({kNeutral[i], 10.0 / (static_cast<double>(i) + 5.0)});
        }
        return w;
    }();
    return words;
}

inline std::string synth_prose_doc(llmfrac::SplitMix64& rng) {
    const auto& words = prose_words();
    double total = 0.0;
    for (const auto& w : words) total += w.weight;

    auto draw_word = [&]() -> const std::string& {
        double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53 * total;
        double acc = 0.0;
        for (const auto& w : words) {
            acc += w.weight;
            if (u < acc) return w.word;
        }
        return words.back().word;
    };

    std::size_t n_sentences = 3 + rng.uniform_below(5);
    std::string text;
    for (std::size_t s = 0; s < n_sentences; ++s) {
        std::size_t n_words = 8 + rng.uniform_below(7);
        for (std::size_t i = 0; i < n_words; ++i) {
            if (i) text.push_back(' ');
            text += draw_word();
        }
        text += ". ";
    }
    text.pop_back();
    return text;
}

inline llmfrac::Corpus synth_prose_corpus(std::size_t n, std::uint64_t seed,
                                          const std::string& id_prefix,
                                          llmfrac::Date date = {2021, 6, 15}) {
    llmfrac::SplitMix64 rng(seed);
    llmfrac::Corpus corpus;
    corpus.source_label = id_prefix;
    for (std::size_t i = 0; i < n; ++i) {
        llmfrac::Document doc;
        doc.id = id_prefix + std::to_string(i);
        doc.date = date;
        doc.text = synth_prose_doc(rng);
        corpus.docs.push_back(std::move(doc));
    }
    return corpus;
}

}  // namespace testsup
