#include "bathwave/simd/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace bathwave::simd {

#if defined(BW_HAVE_AVX2_TU)
const KernelTable& avx2_table();
#endif
#if defined(BW_HAVE_NEON_TU)
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(BW_HAVE_AVX2_TU)
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return &avx2_table();
#endif
    return nullptr;
}

const KernelTable* neon_kernels() {
#if defined(BW_HAVE_NEON_TU)
    return &neon_table();
#else
    return nullptr;
#endif
}

const KernelTable& kernels() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("BATHWAVE_SIMD");
        if (env && std::strcmp(env, "scalar") == 0) return &scalar_kernels();
        if (auto* t = avx2_kernels()) return t;
        if (auto* t = neon_kernels()) return t;
        return &scalar_kernels();
    }();
    return *chosen;
}

}  // namespace bathwave::simd
