#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "llmfrac/corpus.hpp"
#include "llmfrac/text.hpp"
#include "llmfrac/vocabulary.hpp"

namespace llmfrac {

struct FitConfig {
    enum class Unit { document, sentence };

    Unit unit = Unit::document;
    int min_df = 5;             // token must appear in >= min_df units of EACH corpus
    int max_vocab = 5000;
    double smoothing_beta = 0.5;
    double clamp_epsilon = 1e-6;  // probabilities clamped to [eps, 1-eps]
    int min_docs = 100;           // minimum units per training corpus

    void validate() const;
};

const char* unit_name(FitConfig::Unit u) noexcept;
FitConfig::Unit unit_from_name(std::string_view name);

struct ModelProvenance {
    std::string human_label, llm_label;
    std::size_t human_docs = 0, llm_docs = 0;
    std::size_t human_units = 0, llm_units = 0;
    std::string human_date_min, human_date_max;
    std::string llm_date_min, llm_date_max;
    // Sorted unique ids of both training corpora; calibration uses them to
    // enforce train/holdout disjointness.
    std::vector<std::string> train_ids;

    bool operator==(const ModelProvenance&) const = default;
};

/// Per-token occurrence model: p[t] is the probability that a human-written
/// unit contains token t at least once, q[t] the same under the LLM
/// distribution. Token presences are modeled as independent within a unit
/// (the factored-likelihood assumption the estimator relies on).
/// Immutable once fitted or loaded; safe to share across threads.
class TokenModel {
public:
    TokenModel() = default;
    TokenModel(Vocabulary vocab, std::vector<double> p, std::vector<double> q, FitConfig config,
               ModelProvenance provenance);

    const Vocabulary& vocab() const noexcept { return vocab_; }
    const std::vector<double>& p() const noexcept { return p_; }
    const std::vector<double>& q() const noexcept { return q_; }
    const FitConfig& config() const noexcept { return config_; }
    const ModelProvenance& provenance() const noexcept { return provenance_; }

    // Scoring tables derived from p and q (not serialized):
    //   w*_[t] = log prob(present) - log prob(absent)
    //   base_* = sum over t of log prob(absent)
    const std::vector<double>& wp() const noexcept { return wp_; }
    const std::vector<double>& wq() const noexcept { return wq_; }
    double base_p() const noexcept { return base_p_; }
    double base_q() const noexcept { return base_q_; }

private:
    Vocabulary vocab_;
    std::vector<double> p_, q_;
    FitConfig config_;
    ModelProvenance provenance_;
    std::vector<double> wp_, wq_;
    double base_p_ = 0.0, base_q_ = 0.0;

    void rebuild_tables();
};

/// Splits a document into estimation units per the configured granularity:
/// the whole text, or its sentences.
std::vector<std::string> unit_texts(const Document& doc, FitConfig::Unit unit);

/// Tokens that appear in at least min_df units of each corpus, ordered by
/// descending combined unit frequency (ties lexicographic ascending),
/// truncated to max_vocab.
Vocabulary build_vocabulary(const Corpus& human, const Corpus& llm, const FitConfig& cfg);

/// Per-slot occurrence probabilities (df_t + beta) / (N + 2 beta), clamped
/// to [eps, 1-eps]. N counts units per cfg.unit.
std::vector<double> estimate_occurrence_probs(const Corpus& corpus, const Vocabulary& vocab,
                                              const FitConfig& cfg);

/// Full fit: vocabulary from both corpora, p from human, q from llm,
/// provenance recorded. Deterministic given inputs.
TokenModel fit(const Corpus& human, const Corpus& llm, const FitConfig& cfg);

/// Versioned JSON model file; save/load round-trips exactly.
void save_model(const TokenModel& model, const std::filesystem::path& path);
TokenModel load_model(const std::filesystem::path& path);

/// (a, b): log-likelihood of the unit's occurrence pattern under the human
/// and LLM distributions. Always finite thanks to probability clamping.
std::pair<double, double> unit_log_likelihoods(const TokenModel& model, std::string_view unit_text);

/// Same, from precomputed present-slot indices.
std::pair<double, double> unit_log_likelihoods_from_slots(const TokenModel& model,
                                                          const std::vector<std::int32_t>& slots);

}  // namespace llmfrac
