#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace llmfrac::kernels {

/// The arithmetic inner loops of model scoring and likelihood evaluation.
/// Each entry has a scalar reference implementation and may have SIMD
/// variants; the active table is picked once at startup from CPU features.
/// Every implementation is deterministic (fixed accumulation order), so a
/// given binary on a given machine always produces identical bits. Variants
/// are equivalence-tested against the scalar reference.
struct KernelTable {
    const char* name;

    /// Sum of x[0..n). Scalar: left fold. SIMD: 4-lane stride accumulation,
    /// lanes combined as (l0+l1)+(l2+l3), then the tail in index order.
    double (*sum)(const double* x, std::size_t n);

    /// log(sum(exp(x[i]))), safe for large-magnitude inputs and -inf
    /// entries. Returns -inf for n == 0 or all -inf.
    double (*logsumexp)(const double* x, std::size_t n);

    /// Sum over i of logaddexp(log_w1 + a[i], log_w2 + b[i]).
    /// Both weights must be finite (callers handle the alpha = 0 and
    /// alpha = 1 boundaries exactly, outside this kernel).
    double (*mixture_loglik)(const double* a, const double* b, std::size_t n, double log_w1,
                             double log_w2);

    /// sum_p += sum of wp[slots[i]], sum_q += sum of wq[slots[i]].
    void (*pair_gather_sum)(const std::int32_t* slots, std::size_t n, const double* wp,
                            const double* wq, double* sum_p, double* sum_q);
};

const KernelTable& scalar_table() noexcept;

/// AVX2+FMA table, or nullptr when the build or the CPU lacks support.
const KernelTable* avx2_table() noexcept;

/// Runtime-selected table (best supported variant unless overridden).
const KernelTable& active() noexcept;

/// Force a variant: "auto", "scalar" or "avx2". Returns false (and leaves
/// the selection unchanged) if the variant is unavailable.
bool select(std::string_view name) noexcept;

}  // namespace llmfrac::kernels
