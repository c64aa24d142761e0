#pragma once

#include "llmfrac/kernels.hpp"

namespace llmfrac::kernels {

#if defined(LLMFRAC_HAVE_AVX2_KERNELS)
// Defined in kernels_avx2.cpp, which is compiled with AVX2+FMA codegen.
// Call only after a runtime CPU feature check.
const KernelTable& avx2_impl_table() noexcept;
#endif

}  // namespace llmfrac::kernels
