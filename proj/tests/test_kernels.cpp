#include <doctest.h>

#include <string>

#include <cmath>
#include <limits>
#include <vector>

#include "llmfrac/kernels.hpp"
#include "llmfrac/rng.hpp"

using namespace llmfrac;

namespace {

std::vector<double> random_array(std::size_t n, double lo, double hi, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<double> v(n);
    for (double& x : v) {
        double u = static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
        x = lo + (hi - lo) * u;
    }
    return v;
}

// long double reference for accuracy checks
double ref_mixture_loglik(const std::vector<double>& a, const std::vector<double>& b, double lw1,
                          double lw2) {
    long double total = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) {
        long double s1 = static_cast<long double>(lw1) + a[i];
        long double s2 = static_cast<long double>(lw2) + b[i];
        long double hi = std::max(s1, s2);
        total += hi + std::log1p(std::exp(std::min(s1, s2) - hi));
    }
    return static_cast<double>(total);
}

}  // namespace

TEST_CASE("kernel tables exist and dispatch") {
    CHECK(std::string(kernels::scalar_table().name) == "scalar");
    CHECK(kernels::select("scalar"));
    CHECK(std::string(kernels::active().name) == "scalar");
    CHECK(kernels::select("auto"));
    CHECK_FALSE(kernels::select("sse9"));
#if defined(__x86_64__)
    if (kernels::avx2_table()) {
        CHECK(kernels::select("avx2"));
        CHECK(std::string(kernels::active().name) == "avx2");
        CHECK(kernels::select("auto"));
    }
#endif
}

TEST_CASE("scalar kernels: basic values") {
    const auto& k = kernels::scalar_table();
    std::vector<double> x{1.0, 2.0, 3.5};
    CHECK(k.sum(x.data(), x.size()) == doctest::Approx(6.5).epsilon(1e-15));
    CHECK(k.sum(x.data(), 0) == 0.0);

    std::vector<double> y{0.0, 0.0};
    CHECK(k.logsumexp(y.data(), 2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> z{neg_inf, 1.0};
    CHECK(k.logsumexp(z.data(), 2) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> all_inf{neg_inf, neg_inf};
    CHECK(k.logsumexp(all_inf.data(), 2) == neg_inf);
    CHECK(k.logsumexp(nullptr, 0) == neg_inf);

    // mixture with equal unit scores reduces to the score itself
    std::vector<double> a{-2.0}, b{-2.0};
    CHECK(k.mixture_loglik(a.data(), b.data(), 1, std::log(0.5), std::log(0.5)) ==
          doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("pair_gather_sum accumulates both tables") {
    const auto& k = kernels::scalar_table();
    std::vector<double> wp{1.0, 10.0, 100.0};
    std::vector<double> wq{-1.0, -10.0, -100.0};
    std::vector<std::int32_t> slots{0, 2};
    double sp = 5.0, sq = 5.0;
    k.pair_gather_sum(slots.data(), slots.size(), wp.data(), wq.data(), &sp, &sq);
    CHECK(sp == doctest::Approx(106.0));
    CHECK(sq == doctest::Approx(-96.0));
}

TEST_CASE("avx2 kernels match scalar reference") {
    const kernels::KernelTable* avx2 = kernels::avx2_table();
    if (!avx2) return;  // CPU or build without AVX2
    const auto& scalar = kernels::scalar_table();

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        // sizes straddle the vector width to exercise tails
        std::size_t n = 1 + static_cast<std::size_t>(SplitMix64(seed).uniform_below(1000));
        auto a = random_array(n, -400.0, -1.0, seed * 3 + 0);
        auto b = random_array(n, -400.0, -1.0, seed * 3 + 1);

        double s_ref = scalar.sum(a.data(), n);
        double s_simd = avx2->sum(a.data(), n);
        CHECK(std::abs(s_ref - s_simd) <= 1e-10 * std::max(1.0, std::abs(s_ref)));

        double l_ref = scalar.logsumexp(a.data(), n);
        double l_simd = avx2->logsumexp(a.data(), n);
        CHECK(std::abs(l_ref - l_simd) <= 1e-11 * std::max(1.0, std::abs(l_ref)));

        for (double alpha : {1e-6, 0.01, 0.37, 0.5, 0.99, 1.0 - 1e-6}) {
            double lw1 = std::log1p(-alpha), lw2 = std::log(alpha);
            double m_ref = scalar.mixture_loglik(a.data(), b.data(), n, lw1, lw2);
            double m_simd = avx2->mixture_loglik(a.data(), b.data(), n, lw1, lw2);
            CHECK(std::abs(m_ref - m_simd) <= 1e-10 * std::max(1.0, std::abs(m_ref)));
        }

        std::vector<std::int32_t> slots;
        SplitMix64 rng(seed * 7);
        for (std::size_t i = 0; i < 37; ++i) {
            slots.push_back(static_cast<std::int32_t>(rng.uniform_below(n)));
        }
        double sp_ref = 0, sq_ref = 0, sp_simd = 0, sq_simd = 0;
        scalar.pair_gather_sum(slots.data(), slots.size(), a.data(), b.data(), &sp_ref, &sq_ref);
        avx2->pair_gather_sum(slots.data(), slots.size(), a.data(), b.data(), &sp_simd, &sq_simd);
        CHECK(std::abs(sp_ref - sp_simd) <= 1e-10 * std::max(1.0, std::abs(sp_ref)));
        CHECK(std::abs(sq_ref - sq_simd) <= 1e-10 * std::max(1.0, std::abs(sq_ref)));
    }
}

TEST_CASE("avx2 logsumexp handles -inf lanes and huge spreads") {
    const kernels::KernelTable* avx2 = kernels::avx2_table();
    if (!avx2) return;
    const double neg_inf = -std::numeric_limits<double>::infinity();

    std::vector<double> x{neg_inf, -5000.0, -2.0, neg_inf, -1.0, -800.0, neg_inf, neg_inf, -3.0};
    double got = avx2->logsumexp(x.data(), x.size());
    double want = kernels::scalar_table().logsumexp(x.data(), x.size());
    CHECK(got == doctest::Approx(want).epsilon(1e-13));

    std::vector<double> all_inf(9, neg_inf);
    CHECK(avx2->logsumexp(all_inf.data(), all_inf.size()) == neg_inf);
}

TEST_CASE("kernel accuracy against long double reference") {
    for (const kernels::KernelTable* table :
         {&kernels::scalar_table(), kernels::avx2_table()}) {
        if (!table) continue;
        auto a = random_array(503, -900.0, -0.5, 11);
        auto b = random_array(503, -900.0, -0.5, 12);
        for (double alpha : {0.001, 0.25, 0.999}) {
            double lw1 = std::log1p(-alpha), lw2 = std::log(alpha);
            double want = ref_mixture_loglik(a, b, lw1, lw2);
            double got = table->mixture_loglik(a.data(), b.data(), a.size(), lw1, lw2);
            CHECK(std::abs(got - want) <= 1e-10 * std::abs(want));
        }
    }
}
