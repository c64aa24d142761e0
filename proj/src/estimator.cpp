#include "llmfrac/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "llmfrac/errors.hpp"
#include "llmfrac/kernels.hpp"
#include "llmfrac/parallel.hpp"
#include "llmfrac/rng.hpp"

namespace llmfrac {

using nlohmann::json;

json EstimateResult::to_json() const {
    json flags = json::array();
    if (boundary_low) flags.push_back("boundary_low");
    if (boundary_high) flags.push_back("boundary_high");
    if (flat_units_present) flags.push_back("flat_likelihood_removed_tokens");
    return json{{"alpha", alpha_hat}, {"ci_low", ci_low},   {"ci_high", ci_high},
                {"n", n_units},       {"B", n_bootstrap},   {"seed", seed},
                {"flags", flags}};
}

EstimateResult EstimateResult::from_json(const json& j) {
    EstimateResult r;
    r.alpha_hat = j.at("alpha").get<double>();
    r.ci_low = j.at("ci_low").get<double>();
    r.ci_high = j.at("ci_high").get<double>();
    r.n_units = j.at("n").get<std::size_t>();
    r.n_bootstrap = j.at("B").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& f : j.at("flags")) {
        std::string name = f.get<std::string>();
        if (name == "boundary_low") r.boundary_low = true;
        if (name == "boundary_high") r.boundary_high = true;
        if (name == "flat_likelihood_removed_tokens") r.flat_units_present = true;
    }
    return r;
}

UnitScores score_units(const TokenModel& model, const Corpus& corpus) {
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return corpus.docs[i].id < corpus.docs[j].id;
    });

    UnitScores scores;
    scores.n_docs = corpus.size();
    for (std::size_t i : order) {
        for (const std::string& u : unit_texts(corpus.docs[i], model.config().unit)) {
            auto [a, b] = unit_log_likelihoods(model, u);
            scores.a.push_back(a);
            scores.b.push_back(b);
        }
    }
    return scores;
}

double log_likelihood(const UnitScores& scores, double alpha) {
    if (scores.size() == 0) raise(Errc::empty_corpus, "log_likelihood of an empty corpus");
    if (!(alpha >= 0.0 && alpha <= 1.0)) raise(Errc::invalid_argument, "alpha must lie in [0, 1]");
    const auto& k = kernels::active();
    if (alpha == 0.0) return k.sum(scores.a.data(), scores.size());
    if (alpha == 1.0) return k.sum(scores.b.data(), scores.size());
    return k.mixture_loglik(scores.a.data(), scores.b.data(), scores.size(), std::log1p(-alpha),
                            std::log(alpha));
}

double log_likelihood(const TokenModel& model, const Corpus& corpus, double alpha) {
    return log_likelihood(score_units(model, corpus), alpha);
}

namespace {

struct MleOutcome {
    double alpha = 0.0;
    double loglik = 0.0;
    bool boundary_low = false;
    bool boundary_high = false;
    bool flat_units = false;
    bool all_flat = false;
};

constexpr int kMaxGoldenIterations = 200;

// Concavity makes boundary detection exact:
//   dL/da at 0 <= 0  <=>  logsumexp(b - a) <= log n   => argmax is 0
//   dL/da at 1 >= 0  <=>  logsumexp(a - b) <= log n   => argmax is 1
MleOutcome maximize_alpha(const double* a, const double* b, std::size_t n, double tol) {
    const auto& k = kernels::active();
    MleOutcome out;

    std::size_t n_flat = 0;
    for (std::size_t i = 0; i < n; ++i) n_flat += (a[i] == b[i]);
    out.flat_units = n_flat > 0;
    if (n_flat == n) {
        out.all_flat = true;
        return out;
    }

    const double log_n = std::log(static_cast<double>(n));
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) delta[i] = b[i] - a[i];
    if (k.logsumexp(delta.data(), n) <= log_n) {
        out.alpha = 0.0;
        out.boundary_low = true;
        out.loglik = k.sum(a, n);
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) delta[i] = a[i] - b[i];
    if (k.logsumexp(delta.data(), n) <= log_n) {
        out.alpha = 1.0;
        out.boundary_high = true;
        out.loglik = k.sum(b, n);
        return out;
    }

    auto eval = [&](double alpha) {
        return k.mixture_loglik(a, b, n, std::log1p(-alpha), std::log(alpha));
    };

    constexpr double kInvPhi = 0.6180339887498949;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - kInvPhi * (hi - lo);
    double x2 = lo + kInvPhi * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    for (int iter = 0; iter < kMaxGoldenIterations && (hi - lo) > tol; ++iter) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + kInvPhi * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - kInvPhi * (hi - lo);
            f1 = eval(x1);
        }
    }
    out.alpha = 0.5 * (lo + hi);
    out.loglik = eval(out.alpha);
    return out;
}

MleOutcome maximize_or_throw(const double* a, const double* b, std::size_t n, double tol) {
    MleOutcome out = maximize_alpha(a, b, n, tol);
    if (out.all_flat) {
        raise(Errc::flat_likelihood, "every unit gives a_d == b_d; alpha is unidentifiable");
    }
    return out;
}

// Quantile with linear interpolation between order statistics (same
// convention as numpy's default / R type 7). v must be sorted.
double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.size() == 1) return v.front();
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    if (lo >= v.size() - 1) return v.back();
    double frac = pos - static_cast<double>(lo);
    return v[lo] + (v[lo + 1] - v[lo]) * frac;
}

EstimateResult result_from_outcome(const MleOutcome& out, std::size_t n) {
    EstimateResult r;
    r.alpha_hat = out.alpha;
    r.log_likelihood = out.loglik;
    r.n_units = n;
    r.ci_low = out.alpha;
    r.ci_high = out.alpha;
    r.boundary_low = out.boundary_low;
    r.boundary_high = out.boundary_high;
    r.flat_units_present = out.flat_units;
    return r;
}

}  // namespace

EstimateResult mle_alpha(const UnitScores& scores, double tol) {
    if (scores.size() == 0) raise(Errc::empty_corpus, "mle_alpha on an empty corpus");
    if (!(tol > 0.0 && tol <= 1e-3)) raise(Errc::invalid_argument, "tol must lie in (0, 1e-3]");
    MleOutcome out = maximize_or_throw(scores.a.data(), scores.b.data(), scores.size(), tol);
    return result_from_outcome(out, scores.size());
}

EstimateResult mle_alpha(const TokenModel& model, const Corpus& corpus, double tol) {
    return mle_alpha(score_units(model, corpus), tol);
}

namespace {

constexpr double kBootstrapTol = 1e-6;

// One bootstrap replicate: n draws with replacement from the canonical
// id-sorted unit order, using only the caller-provided stream.
double replicate_alpha(const UnitScores& scores, SplitMix64& rng, double fallback_alpha,
                       std::vector<double>& ra, std::vector<double>& rb) {
    const std::size_t n = scores.size();
    ra.resize(n);
    rb.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = static_cast<std::size_t>(rng.uniform_below(n));
        ra[i] = scores.a[j];
        rb[i] = scores.b[j];
    }
    MleOutcome out = maximize_alpha(ra.data(), rb.data(), n, kBootstrapTol);
    // A replicate made entirely of no-signal units pins nothing; keep the
    // full-sample estimate so the CI is not dragged toward an arbitrary value.
    return out.all_flat ? fallback_alpha : out.alpha;
}

}  // namespace

EstimateResult bootstrap_ci(const UnitScores& scores, int n_bootstrap, double level,
                            std::uint64_t seed) {
    if (n_bootstrap < 100) raise(Errc::invalid_argument, "n_bootstrap must be >= 100");
    if (!(level > 0.0 && level < 1.0)) raise(Errc::invalid_argument, "level must lie in (0, 1)");
    if (scores.size() == 0) raise(Errc::empty_corpus, "bootstrap_ci on an empty corpus");

    MleOutcome full = maximize_or_throw(scores.a.data(), scores.b.data(), scores.size(),
                                        kBootstrapTol);

    std::vector<double> alphas(static_cast<std::size_t>(n_bootstrap));
    parallel_for(alphas.size(), [&](std::size_t r) {
        SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        std::vector<double> ra, rb;
        alphas[r] = replicate_alpha(scores, rng, full.alpha, ra, rb);
    });
    std::sort(alphas.begin(), alphas.end());

    EstimateResult result = result_from_outcome(full, scores.size());
    result.n_bootstrap = n_bootstrap;
    result.seed = seed;
    const double tail = (1.0 - level) / 2.0;
    result.ci_low = std::min(quantile_sorted(alphas, tail), result.alpha_hat);
    result.ci_high = std::max(quantile_sorted(alphas, 1.0 - tail), result.alpha_hat);
    return result;
}

EstimateResult bootstrap_ci(const TokenModel& model, const Corpus& corpus, int n_bootstrap,
                            double level, std::uint64_t seed) {
    return bootstrap_ci(score_units(model, corpus), n_bootstrap, level, seed);
}

json ComparisonResult::to_json() const {
    return json{{"diff", diff},
                {"p_value", p_value},
                {"group_a", group_a.to_json()},
                {"group_b", group_b.to_json()}};
}

ComparisonResult compare_groups(const TokenModel& model, const Corpus& corpus_a,
                                const Corpus& corpus_b, int n_bootstrap, std::uint64_t seed) {
    if (n_bootstrap < 200) raise(Errc::invalid_argument, "compare_groups needs n_bootstrap >= 200");
    if (corpus_a.empty() || corpus_b.empty()) {
        raise(Errc::empty_corpus, "compare_groups needs two non-empty corpora");
    }

    UnitScores sa = score_units(model, corpus_a);
    UnitScores sb = score_units(model, corpus_b);
    MleOutcome full_a = maximize_or_throw(sa.a.data(), sa.b.data(), sa.size(), kBootstrapTol);
    MleOutcome full_b = maximize_or_throw(sb.a.data(), sb.b.data(), sb.size(), kBootstrapTol);

    const std::size_t B = static_cast<std::size_t>(n_bootstrap);
    std::vector<double> alpha_a(B), alpha_b(B);
    parallel_for(B, [&](std::size_t r) {
        const std::uint64_t child = derive_seed(seed, static_cast<std::uint64_t>(r));
        std::vector<double> ra, rb;
        // Identical child streams couple the two resamples, so equal corpora
        // give diff* == 0 in every replicate.
        SplitMix64 rng_a(child);
        alpha_a[r] = replicate_alpha(sa, rng_a, full_a.alpha, ra, rb);
        SplitMix64 rng_b(child);
        alpha_b[r] = replicate_alpha(sb, rng_b, full_b.alpha, ra, rb);
    });

    std::size_t n_le = 0, n_ge = 0;
    for (std::size_t r = 0; r < B; ++r) {
        double d = alpha_a[r] - alpha_b[r];
        if (d <= 0.0) ++n_le;
        if (d >= 0.0) ++n_ge;
    }
    double p = 2.0 * static_cast<double>(std::min(n_le, n_ge)) / static_cast<double>(B);
    p = std::clamp(p, 1.0 / static_cast<double>(B), 1.0);

    auto group_result = [&](const MleOutcome& full, std::vector<double>& alphas, std::size_t n) {
        std::sort(alphas.begin(), alphas.end());
        EstimateResult r = result_from_outcome(full, n);
        r.n_bootstrap = n_bootstrap;
        r.seed = seed;
        r.ci_low = std::min(quantile_sorted(alphas, 0.025), r.alpha_hat);
        r.ci_high = std::max(quantile_sorted(alphas, 0.975), r.alpha_hat);
        return r;
    };

    ComparisonResult result;
    result.diff = full_a.alpha - full_b.alpha;
    result.p_value = p;
    result.group_a = group_result(full_a, alpha_a, sa.size());
    result.group_b = group_result(full_b, alpha_b, sb.size());
    return result;
}

}  // namespace llmfrac
