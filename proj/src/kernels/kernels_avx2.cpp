// AVX2+FMA kernel variants. This translation unit is compiled with
// -mavx2 -mfma; nothing here may run before the dispatcher's CPU check.

#include "kernels_internal.hpp"

#if defined(LLMFRAC_HAVE_AVX2_KERNELS)

#include <immintrin.h>

#include <cmath>
#include <limits>

namespace llmfrac::kernels {

namespace {

// exp(x) for finite x <= 709; inputs below -708 flush to 0. Cody-Waite
// range reduction, degree-13 Taylor polynomial on |r| <= ln2/2, scaling by
// 2^k through the exponent field. Absolute accuracy ~1 ulp on the reduced
// range, which the equivalence tests pin against std::exp.
inline __m256d vexp(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634074);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

    __m256d k = _mm256_round_pd(_mm256_mul_pd(x, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(k, ln2_hi, x);
    r = _mm256_fnmadd_pd(k, ln2_lo, r);

    // Horner over 1/n! for n = 13 .. 0
    __m256d p = _mm256_set1_pd(1.0 / 6227020800.0);
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 479001600.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 39916800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 3628800.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 362880.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 40320.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 5040.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 720.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 120.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 24.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0 / 6.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(0.5));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));
    p = _mm256_fmadd_pd(p, r, _mm256_set1_pd(1.0));

    // 2^k: k is integral and within [-1021, 1023] once the underflow mask
    // below is accounted for
    __m128i k32 = _mm256_cvtpd_epi32(k);
    __m256i k64 = _mm256_cvtepi32_epi64(k32);
    __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(k64, _mm256_set1_epi64x(1023)), 52);
    __m256d scale = _mm256_castsi256_pd(bits);

    __m256d result = _mm256_mul_pd(p, scale);
    __m256d in_range = _mm256_cmp_pd(x, _mm256_set1_pd(-708.0), _CMP_GE_OQ);
    return _mm256_and_pd(result, in_range);
}

// log(1+u) for u in [0, 1]. Reduce x = 1+u to [sqrt(1/2), sqrt(2)), then
// 2*atanh(z) with z = (xr-1)/(xr+1) via an odd polynomial up to z^21.
inline __m256d vlog1p01(__m256d u) {
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730951);
    const __m256d ln2_hi = _mm256_set1_pd(6.93147180369123816490e-01);
    const __m256d ln2_lo = _mm256_set1_pd(1.90821492927058770002e-10);

    __m256d x = _mm256_add_pd(one, u);
    __m256d halve = _mm256_cmp_pd(x, sqrt2, _CMP_GT_OQ);
    __m256d xr = _mm256_blendv_pd(x, _mm256_mul_pd(x, _mm256_set1_pd(0.5)), halve);
    __m256d k = _mm256_and_pd(halve, one);

    __m256d f = _mm256_sub_pd(xr, one);
    __m256d z = _mm256_div_pd(f, _mm256_add_pd(_mm256_set1_pd(2.0), f));
    __m256d w = _mm256_mul_pd(z, z);

    // Horner over 1/(2n+1) for n = 10 .. 0
    __m256d p = _mm256_set1_pd(1.0 / 21.0);
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 19.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 17.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 15.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 13.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 11.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 9.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 7.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 5.0));
    p = _mm256_fmadd_pd(p, w, _mm256_set1_pd(1.0 / 3.0));
    p = _mm256_fmadd_pd(p, w, one);

    __m256d log_xr = _mm256_mul_pd(_mm256_add_pd(z, z), p);
    return _mm256_fmadd_pd(k, ln2_hi, _mm256_fmadd_pd(k, ln2_lo, log_xr));
}

inline double lane_sum(__m256d v) {
    alignas(32) double l[4];
    _mm256_store_pd(l, v);
    return (l[0] + l[1]) + (l[2] + l[3]);
}

double sum_avx2(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = lane_sum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double logsumexp_avx2(const double* x, std::size_t n) {
    const double neg_inf = -std::numeric_limits<double>::infinity();
    __m256d vmax = _mm256_set1_pd(neg_inf);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vmax = _mm256_max_pd(vmax, _mm256_loadu_pd(x + i));
    alignas(32) double l[4];
    _mm256_store_pd(l, vmax);
    double m = std::max(std::max(l[0], l[1]), std::max(l[2], l[3]));
    for (; i < n; ++i) m = std::max(m, x[i]);
    if (!(m > neg_inf)) return m;

    __m256d vm = _mm256_set1_pd(m);
    __m256d acc = _mm256_setzero_pd();
    i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, vexp(_mm256_sub_pd(_mm256_loadu_pd(x + i), vm)));
    }
    double s = lane_sum(acc);
    for (; i < n; ++i) s += std::exp(x[i] - m);
    return m + std::log(s);
}

double mixture_loglik_avx2(const double* a, const double* b, std::size_t n, double log_w1,
                           double log_w2) {
    const __m256d vw1 = _mm256_set1_pd(log_w1);
    const __m256d vw2 = _mm256_set1_pd(log_w2);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d s1 = _mm256_add_pd(vw1, _mm256_loadu_pd(a + i));
        __m256d s2 = _mm256_add_pd(vw2, _mm256_loadu_pd(b + i));
        __m256d hi = _mm256_max_pd(s1, s2);
        __m256d lo = _mm256_min_pd(s1, s2);
        __m256d t = vexp(_mm256_sub_pd(lo, hi));
        acc = _mm256_add_pd(acc, _mm256_add_pd(hi, vlog1p01(t)));
    }
    double s = lane_sum(acc);
    for (; i < n; ++i) {
        double s1 = log_w1 + a[i];
        double s2 = log_w2 + b[i];
        double hi = s1 > s2 ? s1 : s2;
        double lo = s1 > s2 ? s2 : s1;
        s += hi + std::log1p(std::exp(lo - hi));
    }
    return s;
}

void pair_gather_sum_avx2(const std::int32_t* slots, std::size_t n, const double* wp,
                          const double* wq, double* sum_p, double* sum_q) {
    __m256d accp = _mm256_setzero_pd();
    __m256d accq = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(slots + i));
        accp = _mm256_add_pd(accp, _mm256_i32gather_pd(wp, idx, 8));
        accq = _mm256_add_pd(accq, _mm256_i32gather_pd(wq, idx, 8));
    }
    double sp = lane_sum(accp);
    double sq = lane_sum(accq);
    for (; i < n; ++i) {
        sp += wp[slots[i]];
        sq += wq[slots[i]];
    }
    *sum_p += sp;
    *sum_q += sq;
}

constexpr KernelTable kAvx2 = {
    "avx2",
    sum_avx2,
    logsumexp_avx2,
    mixture_loglik_avx2,
    pair_gather_sum_avx2,
};

}  // namespace

const KernelTable& avx2_impl_table() noexcept { return kAvx2; }

}  // namespace llmfrac::kernels

#endif  // LLMFRAC_HAVE_AVX2_KERNELS
