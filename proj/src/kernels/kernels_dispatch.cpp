#include <atomic>
#include <cstdlib>

#include "kernels_internal.hpp"

namespace llmfrac::kernels {

namespace {

bool cpu_has_avx2() noexcept {
#if defined(LLMFRAC_HAVE_AVX2_KERNELS) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

// "auto" picks the best supported variant; LLMFRAC_KERNEL=scalar|avx2 in the
// environment overrides it (an explicit select() call still wins).
const KernelTable* pick_auto() noexcept {
    if (const char* force = std::getenv("LLMFRAC_KERNEL")) {
        std::string_view name(force);
        if (name == "scalar") return &scalar_table();
#if defined(LLMFRAC_HAVE_AVX2_KERNELS)
        if (name == "avx2" && cpu_has_avx2()) return &avx2_impl_table();
#endif
    }
#if defined(LLMFRAC_HAVE_AVX2_KERNELS)
    if (cpu_has_avx2()) return &avx2_impl_table();
#endif
    return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable* avx2_table() noexcept {
#if defined(LLMFRAC_HAVE_AVX2_KERNELS)
    if (cpu_has_avx2()) return &avx2_impl_table();
#endif
    return nullptr;
}

const KernelTable& active() noexcept {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (!t) {
        t = pick_auto();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

bool select(std::string_view name) noexcept {
    if (name == "auto") {
        g_active.store(pick_auto(), std::memory_order_release);
        return true;
    }
    if (name == "scalar") {
        g_active.store(&scalar_table(), std::memory_order_release);
        return true;
    }
    if (name == "avx2") {
        if (const KernelTable* t = avx2_table()) {
            g_active.store(t, std::memory_order_release);
            return true;
        }
        return false;
    }
    return false;
}

}  // namespace llmfrac::kernels
