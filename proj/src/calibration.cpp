#include "llmfrac/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_set>

#include "llmfrac/errors.hpp"
#include "llmfrac/parallel.hpp"
#include "llmfrac/rng.hpp"

namespace llmfrac {

using nlohmann::json;

CalibrationSpec::CalibrationSpec() {
    alpha_grid.reserve(11);
    for (int i = 0; i <= 10; ++i) alpha_grid.push_back(static_cast<double>(i) * 0.025);
}

void CalibrationSpec::validate() const {
    if (alpha_grid.empty()) raise(Errc::invalid_argument, "alpha_grid must be non-empty");
    for (double a : alpha_grid) {
        if (!(a >= 0.0 && a <= 1.0)) raise(Errc::invalid_argument, "alpha_grid values must lie in [0, 1]");
    }
    if (!std::is_sorted(alpha_grid.begin(), alpha_grid.end()) ||
        std::adjacent_find(alpha_grid.begin(), alpha_grid.end()) != alpha_grid.end()) {
        raise(Errc::invalid_argument, "alpha_grid must be sorted and unique");
    }
    if (n_per_mix < 20) raise(Errc::invalid_argument, "n_per_mix must be >= 20");
    if (replicates < 1) raise(Errc::invalid_argument, "replicates must be >= 1");
    if (n_bootstrap < 100) raise(Errc::invalid_argument, "n_bootstrap must be >= 100");
    if (!(level > 0.0 && level < 1.0)) raise(Errc::invalid_argument, "level must lie in (0, 1)");
}

json CalibrationReport::summary_json() const {
    return json{{"rows", rows.size()},
                {"max_abs_error", max_abs_error},
                {"mean_abs_error", mean_abs_error}};
}

Corpus make_mixture(const Corpus& human_docs, const Corpus& llm_docs, double alpha_true, int n,
                    std::uint64_t seed) {
    if (n < 1) raise(Errc::invalid_argument, "mixture size must be >= 1");
    if (!(alpha_true >= 0.0 && alpha_true <= 1.0)) {
        raise(Errc::invalid_argument, "alpha_true must lie in [0, 1]");
    }
    const std::size_t n_llm = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * alpha_true + 0.5));
    const std::size_t n_human = static_cast<std::size_t>(n) - n_llm;
    if (llm_docs.size() < n_llm) {
        raise(Errc::insufficient_pool, "llm pool: need " + std::to_string(n_llm) + ", have " +
                                           std::to_string(llm_docs.size()));
    }
    if (human_docs.size() < n_human) {
        raise(Errc::insufficient_pool, "human pool: need " + std::to_string(n_human) + ", have " +
                                           std::to_string(human_docs.size()));
    }

    Corpus mix;
    {
        char label[64];
        std::snprintf(label, sizeof(label), "mixture(alpha_true=%.6g,n=%d)", alpha_true, n);
        mix.source_label = label;
    }
    for (std::size_t i : sample_indices(human_docs.size(), n_human, derive_seed(seed, "human"))) {
        mix.docs.push_back(human_docs.docs[i]);
    }
    for (std::size_t i : sample_indices(llm_docs.size(), n_llm, derive_seed(seed, "llm"))) {
        mix.docs.push_back(llm_docs.docs[i]);
    }
    SplitMix64 rng(derive_seed(seed, "shuffle"));
    shuffle(mix.docs, rng);
    return mix;
}

namespace {

void check_holdout(const TokenModel& model, const Corpus& holdout, const Date& cutoff,
                   const char* which) {
    const auto& train = model.provenance().train_ids;
    for (const Document& d : holdout.docs) {
        if (std::binary_search(train.begin(), train.end(), d.id)) {
            raise(Errc::train_test_overlap,
                  std::string(which) + " holdout doc \"" + d.id + "\" was in the training set");
        }
        if (!(d.date < cutoff)) {
            raise(Errc::holdout_after_cutoff, std::string(which) + " holdout doc \"" + d.id +
                                                  "\" dated " + d.date.to_string() +
                                                  " is not before " + cutoff.to_string());
        }
    }
}

}  // namespace

CalibrationReport run_calibration(const TokenModel& model, const Corpus& human_holdout,
                                  const Corpus& llm_holdout, const CalibrationSpec& spec) {
    spec.validate();
    if (human_holdout.empty()) raise(Errc::empty_corpus, "human holdout is empty");
    check_holdout(model, human_holdout, spec.holdout_cutoff, "human");
    check_holdout(model, llm_holdout, spec.holdout_cutoff, "llm");

    struct Job {
        double alpha_true;
        int replicate;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    jobs.reserve(spec.alpha_grid.size() * static_cast<std::size_t>(spec.replicates));
    for (double alpha_true : spec.alpha_grid) {
        for (int rep = 0; rep < spec.replicates; ++rep) {
            char label[64];
            std::snprintf(label, sizeof(label), "calib:%.10g:%d", alpha_true, rep);
            jobs.push_back({alpha_true, rep, derive_seed(spec.seed, label)});
        }
    }

    CalibrationReport report;
    report.rows.resize(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        const Job& job = jobs[i];
        Corpus mix = make_mixture(human_holdout, llm_holdout, job.alpha_true, spec.n_per_mix,
                                  derive_seed(job.seed, "mix"));
        EstimateResult est = bootstrap_ci(model, mix, spec.n_bootstrap, spec.level,
                                          derive_seed(job.seed, "boot"));
        CalibrationRow& row = report.rows[i];
        row.alpha_true = job.alpha_true;
        row.alpha_hat = est.alpha_hat;
        row.ci_half_width = (est.ci_high - est.ci_low) / 2.0;
        row.abs_error = std::abs(est.alpha_hat - job.alpha_true);
        row.replicate = job.replicate;
        row.seed = job.seed;
    });

    double sum = 0.0;
    for (const CalibrationRow& row : report.rows) {
        sum += row.abs_error;
        report.max_abs_error = std::max(report.max_abs_error, row.abs_error);
    }
    report.mean_abs_error = sum / static_cast<double>(report.rows.size());
    return report;
}

EstimateResult false_positive_baseline(const TokenModel& model, const Corpus& human_holdout,
                                       int n_bootstrap, std::uint64_t seed) {
    if (human_holdout.empty()) raise(Errc::empty_corpus, "human holdout is empty");
    return bootstrap_ci(model, human_holdout, n_bootstrap, 0.95, seed);
}

void write_calibration_csv(const CalibrationReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open for writing: " + path.string());
    out << "alpha_true,alpha_hat,ci_half_width,abs_error,replicate,seed\n";
    char line[256];
    for (const CalibrationRow& row : report.rows) {
        std::snprintf(line, sizeof(line), "%.12g,%.12g,%.12g,%.12g,%d,%llu\n", row.alpha_true,
                      row.alpha_hat, row.ci_half_width, row.abs_error, row.replicate,
                      static_cast<unsigned long long>(row.seed));
        out << line;
    }
    if (!out) raise(Errc::io_error, "write failed: " + path.string());
}

}  // namespace llmfrac
