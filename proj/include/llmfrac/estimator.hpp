#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmfrac/corpus.hpp"
#include "llmfrac/model.hpp"

namespace llmfrac {

/// Point estimate of the LLM-generated fraction with optional bootstrap CI.
struct EstimateResult {
    double alpha_hat = 0.0;
    double log_likelihood = 0.0;
    std::size_t n_units = 0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_bootstrap = 0;  // 0 when no bootstrap ran; then ci_low == ci_high == alpha_hat
    std::uint64_t seed = 0;
    bool boundary_low = false;
    bool boundary_high = false;
    bool flat_units_present = false;  // some units carried no signal (a == b)

    nlohmann::json to_json() const;
    static EstimateResult from_json(const nlohmann::json& j);
};

/// Per-unit observation scores: a[i] and b[i] are the unit's log-likelihood
/// under the human and LLM distributions. Units are ordered canonically by
/// document id (units within a document keep text order), so every
/// downstream sum and resampling draw is invariant to corpus order.
struct UnitScores {
    std::vector<double> a;
    std::vector<double> b;
    std::size_t n_docs = 0;

    std::size_t size() const noexcept { return a.size(); }
};

UnitScores score_units(const TokenModel& model, const Corpus& corpus);

/// Corpus log-likelihood of mixture weight alpha:
///   L(alpha) = sum_d logaddexp(log(1-alpha) + a_d, log(alpha) + b_d)
/// with the boundaries exact: L(0) = sum a_d, L(1) = sum b_d.
double log_likelihood(const UnitScores& scores, double alpha);
double log_likelihood(const TokenModel& model, const Corpus& corpus, double alpha);

/// Maximum-likelihood alpha on [0, 1]. L is concave, so golden-section
/// search finds the maximizer to within tol; exact boundary optima are
/// detected from the sign of dL/dalpha at 0 and 1 and flagged. Throws
/// Error(flat_likelihood) when every unit has a_d == b_d.
EstimateResult mle_alpha(const UnitScores& scores, double tol = 1e-6);
EstimateResult mle_alpha(const TokenModel& model, const Corpus& corpus, double tol = 1e-6);

/// Percentile bootstrap over units. Replicate r resamples size() units with
/// replacement using the child seed derive_seed(seed, r), so results do not
/// depend on scheduling or thread count.
EstimateResult bootstrap_ci(const UnitScores& scores, int n_bootstrap, double level,
                            std::uint64_t seed);
EstimateResult bootstrap_ci(const TokenModel& model, const Corpus& corpus, int n_bootstrap,
                            double level, std::uint64_t seed);

struct ComparisonResult {
    double diff = 0.0;     // alpha_hat(A) - alpha_hat(B)
    double p_value = 1.0;  // two-sided bootstrap p-value
    EstimateResult group_a;
    EstimateResult group_b;

    nlohmann::json to_json() const;
};

/// Paired bootstrap comparison: replicate r resamples both groups with
/// identical child streams (common random numbers), diff*_r is the replicate
/// difference, and p = 2 min(#{diff* <= 0}, #{diff* >= 0}) / B clipped to
/// [1/B, 1].
ComparisonResult compare_groups(const TokenModel& model, const Corpus& corpus_a,
                                const Corpus& corpus_b, int n_bootstrap, std::uint64_t seed);

}  // namespace llmfrac
