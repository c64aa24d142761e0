#include <cmath>
#include <limits>

#include "llmfrac/kernels.hpp"

namespace llmfrac::kernels {

namespace {

double sum_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

double logsumexp_scalar(const double* x, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, x[i]);
    if (!(m > -std::numeric_limits<double>::infinity())) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

double mixture_loglik_scalar(const double* a, const double* b, std::size_t n, double log_w1,
                             double log_w2) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double s1 = log_w1 + a[i];
        double s2 = log_w2 + b[i];
        double hi = s1 > s2 ? s1 : s2;
        double lo = s1 > s2 ? s2 : s1;
        s += hi + std::log1p(std::exp(lo - hi));
    }
    return s;
}

void pair_gather_sum_scalar(const std::int32_t* slots, std::size_t n, const double* wp,
                            const double* wq, double* sum_p, double* sum_q) {
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sp += wp[slots[i]];
        sq += wq[slots[i]];
    }
    *sum_p += sp;
    *sum_q += sq;
}

constexpr KernelTable kScalar = {
    "scalar",
    sum_scalar,
    logsumexp_scalar,
    mixture_loglik_scalar,
    pair_gather_sum_scalar,
};

}  // namespace

const KernelTable& scalar_table() noexcept { return kScalar; }

}  // namespace llmfrac::kernels
