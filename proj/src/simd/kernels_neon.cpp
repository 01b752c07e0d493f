// aarch64 only; NEON is architecturally guaranteed there, so no runtime probe.
#include "bathwave/simd/kernels.hpp"

#include <arm_neon.h>

namespace bathwave::simd {
namespace {

inline const double* dp(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cplx* p) { return reinterpret_cast<double*>(p); }

// one complex per float64x2_t; two independent accumulators hide FMA latency
inline float64x2_t swap_ri(float64x2_t v) { return vextq_f64(v, v, 1); }

cplx dotu(const cplx* a, const cplx* b, std::size_t n) {
    float64x2_t r1 = vdupq_n_f64(0), r2 = vdupq_n_f64(0);
    for (std::size_t i = 0; i < n; ++i) {
        const float64x2_t va = vld1q_f64(dp(a + i)), vb = vld1q_f64(dp(b + i));
        r1 = vfmaq_laneq_f64(r1, vb, va, 0);
        r2 = vfmaq_laneq_f64(r2, swap_ri(vb), va, 1);
    }
    return {vgetq_lane_f64(r1, 0) - vgetq_lane_f64(r2, 0), vgetq_lane_f64(r1, 1) + vgetq_lane_f64(r2, 1)};
}

cplx dotc(const cplx* a, const cplx* b, std::size_t n) {
    float64x2_t r1 = vdupq_n_f64(0), r2 = vdupq_n_f64(0);
    for (std::size_t i = 0; i < n; ++i) {
        const float64x2_t va = vld1q_f64(dp(a + i)), vb = vld1q_f64(dp(b + i));
        r1 = vfmaq_laneq_f64(r1, vb, va, 0);
        r2 = vfmaq_laneq_f64(r2, swap_ri(vb), va, 1);
    }
    return {vgetq_lane_f64(r1, 0) + vgetq_lane_f64(r2, 0), vgetq_lane_f64(r1, 1) - vgetq_lane_f64(r2, 1)};
}

cplx wdot(const double* w, const cplx* p, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0);
    for (std::size_t i = 0; i < n; ++i) acc = vfmaq_n_f64(acc, vld1q_f64(dp(p + i)), w[i]);
    return {vgetq_lane_f64(acc, 0), vgetq_lane_f64(acc, 1)};
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const float64x2_t ar = vdupq_n_f64(alpha.real());
    const float64x2_t ai = {-alpha.imag(), alpha.imag()};
    for (std::size_t i = 0; i < n; ++i) {
        const float64x2_t vx = vld1q_f64(dp(x + i));
        float64x2_t vy = vld1q_f64(dp(y + i));
        vy = vfmaq_f64(vy, ar, vx);
        vy = vfmaq_f64(vy, ai, swap_ri(vx));
        vst1q_f64(dp(y + i), vy);
    }
}

double norm2(const cplx* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0);
    for (std::size_t i = 0; i < n; ++i) {
        const float64x2_t v = vld1q_f64(dp(x + i));
        acc = vfmaq_f64(acc, v, v);
    }
    return vaddvq_f64(acc);
}

cplx resolvent1(cplx z, const double* w, const cplx* p, std::size_t n) {
    float64x2_t r1 = vdupq_n_f64(0), r2 = vdupq_n_f64(0);
    const double zi = z.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double dr = z.real() - w[i];
        const double inv = 1.0 / (dr * dr + zi * zi);
        const float64x2_t vp = vld1q_f64(dp(p + i));
        r1 = vfmaq_n_f64(r1, vp, dr * inv);
        r2 = vfmaq_n_f64(r2, swap_ri(vp), -zi * inv);
    }
    return {vgetq_lane_f64(r1, 0) - vgetq_lane_f64(r2, 0), vgetq_lane_f64(r1, 1) + vgetq_lane_f64(r2, 1)};
}

void csr_matvec(const CsrView& A, const cplx* x, cplx* y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        float64x2_t r1 = vdupq_n_f64(0), r2 = vdupq_n_f64(0);
        for (std::int32_t j = A.row_ptr[r]; j < A.row_ptr[r + 1]; ++j) {
            const float64x2_t v = vld1q_f64(dp(A.vals + j)), xv = vld1q_f64(dp(x + A.cols[j]));
            r1 = vfmaq_laneq_f64(r1, xv, v, 0);
            r2 = vfmaq_laneq_f64(r2, swap_ri(xv), v, 1);
        }
        y[r] = {vgetq_lane_f64(r1, 0) - vgetq_lane_f64(r2, 0), vgetq_lane_f64(r1, 1) + vgetq_lane_f64(r2, 1)};
    }
}

}  // namespace

const KernelTable& neon_table() {
    // resolvent2 has no NEON specialisation yet
    static const KernelTable t{"neon", dotu, dotc, wdot, axpy, norm2, resolvent1,
                               scalar_kernels().resolvent2, csr_matvec};
    return t;
}

}  // namespace bathwave::simd
