#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "llmfrac/corpus.hpp"
#include "llmfrac/estimator.hpp"
#include "llmfrac/model.hpp"

namespace llmfrac {

/// Known-mixture validation protocol: blend held-out human and LLM docs at
/// each grid fraction, estimate, and score the prediction error.
struct CalibrationSpec {
    std::vector<double> alpha_grid;  // defaults to 0 .. 0.25 step 0.025
    int n_per_mix = 1000;
    int replicates = 3;
    std::uint64_t seed = 0;
    Date holdout_cutoff{2022, 11, 30};
    int n_bootstrap = 1000;
    double level = 0.95;

    CalibrationSpec();
    void validate() const;
};

struct CalibrationRow {
    double alpha_true = 0.0;
    double alpha_hat = 0.0;
    double ci_half_width = 0.0;
    double abs_error = 0.0;
    int replicate = 0;
    std::uint64_t seed = 0;
};

struct CalibrationReport {
    std::vector<CalibrationRow> rows;  // one per (grid point, replicate), grid-major
    double max_abs_error = 0.0;
    double mean_abs_error = 0.0;

    nlohmann::json summary_json() const;
};

/// Deterministic known-alpha blend: round-half-up(n * alpha_true) LLM docs
/// plus human docs up to n, sampled without replacement from each pool and
/// shuffled by the seed. Throws Error(insufficient_pool) when a pool is too
/// small.
Corpus make_mixture(const Corpus& human_docs, const Corpus& llm_docs, double alpha_true, int n,
                    std::uint64_t seed);

/// Runs the full grid. Holdout ids must be disjoint from the model's
/// training ids and all holdout docs must predate spec.holdout_cutoff.
CalibrationReport run_calibration(const TokenModel& model, const Corpus& human_holdout,
                                  const Corpus& llm_holdout, const CalibrationSpec& spec);

/// Estimate on a purely human holdout; the resulting alpha_hat is the
/// false-positive level to contextualize adoption estimates against.
EstimateResult false_positive_baseline(const TokenModel& model, const Corpus& human_holdout,
                                       int n_bootstrap, std::uint64_t seed);

/// CSV with columns alpha_true,alpha_hat,ci_half_width,abs_error,replicate,seed.
void write_calibration_csv(const CalibrationReport& report, const std::filesystem::path& path);

}  // namespace llmfrac
