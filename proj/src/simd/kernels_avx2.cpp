// Built with -mavx2 -mfma; only reached after a runtime CPU check.
#include "bathwave/simd/kernels.hpp"

#include <immintrin.h>

namespace bathwave::simd {
namespace {

inline const double* dp(const cplx* p) { return reinterpret_cast<const double*>(p); }
inline double* dp(cplx* p) { return reinterpret_cast<double*>(p); }

inline __m256d swap_ri(__m256d v) { return _mm256_permute_pd(v, 0b0101); }
inline __m256d dup_re(__m256d v) { return _mm256_movedup_pd(v); }
inline __m256d dup_im(__m256d v) { return _mm256_permute_pd(v, 0b1111); }

// lanes [e0 o0 e1 o1] -> (e0+e1, o0+o1)
inline void hsum_pairs(__m256d v, double& even, double& odd) {
    alignas(32) double t[4];
    _mm256_store_pd(t, v);
    even = t[0] + t[2];
    odd = t[1] + t[3];
}

// acc1 = sum re(a) * b, acc2 = sum im(a) * swap(b); a*b = (e1 - e2, o1 + o2)
inline cplx combine_mul(__m256d acc1, __m256d acc2) {
    double e1, o1, e2, o2;
    hsum_pairs(acc1, e1, o1);
    hsum_pairs(acc2, e2, o2);
    return {e1 - e2, o1 + o2};
}

inline __m256d cmul(__m256d a, __m256d b) {
    return _mm256_fmaddsub_pd(dup_re(a), b, _mm256_mul_pd(dup_im(a), swap_ri(b)));
}

cplx dotu(const cplx* a, const cplx* b, std::size_t n) {
    __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(dp(a + i)), vb = _mm256_loadu_pd(dp(b + i));
        acc1 = _mm256_fmadd_pd(dup_re(va), vb, acc1);
        acc2 = _mm256_fmadd_pd(dup_im(va), swap_ri(vb), acc2);
    }
    cplx s = combine_mul(acc1, acc2);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

cplx dotc(const cplx* a, const cplx* b, std::size_t n) {
    __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d va = _mm256_loadu_pd(dp(a + i)), vb = _mm256_loadu_pd(dp(b + i));
        acc1 = _mm256_fmadd_pd(dup_re(va), vb, acc1);
        acc2 = _mm256_fmadd_pd(dup_im(va), swap_ri(vb), acc2);
    }
    double e1, o1, e2, o2;
    hsum_pairs(acc1, e1, o1);
    hsum_pairs(acc2, e2, o2);
    cplx s{e1 + e2, o1 - o2};
    for (; i < n; ++i) s += std::conj(a[i]) * b[i];
    return s;
}

cplx wdot(const double* w, const cplx* p, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vw = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0b01010000);
        acc = _mm256_fmadd_pd(vw, _mm256_loadu_pd(dp(p + i)), acc);
    }
    double e, o;
    hsum_pairs(acc, e, o);
    cplx s{e, o};
    for (; i < n; ++i) s += w[i] * p[i];
    return s;
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const __m256d ar = _mm256_set1_pd(alpha.real()), ai = _mm256_set1_pd(alpha.imag());
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vx = _mm256_loadu_pd(dp(x + i));
        const __m256d t = _mm256_fmaddsub_pd(ar, vx, _mm256_mul_pd(ai, swap_ri(vx)));
        _mm256_storeu_pd(dp(y + i), _mm256_add_pd(_mm256_loadu_pd(dp(y + i)), t));
    }
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double norm2(const cplx* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v = _mm256_loadu_pd(dp(x + i));
        acc = _mm256_fmadd_pd(v, v, acc);
    }
    double e, o;
    hsum_pairs(acc, e, o);
    double s = e + o;
    for (; i < n; ++i) s += std::norm(x[i]);
    return s;
}

cplx resolvent1(cplx z, const double* w, const cplx* p, std::size_t n) {
    const __m256d zr = _mm256_set1_pd(z.real());
    const __m256d mask_re = _mm256_set_pd(0.0, 1.0, 0.0, 1.0);
    const __m256d nzi = _mm256_set_pd(-z.imag(), 0.0, -z.imag(), 0.0);
    const __m256d zi2 = _mm256_set1_pd(z.imag() * z.imag());
    __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d vw = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(w + i)), 0b01010000);
        const __m256d dr = _mm256_sub_pd(zr, vw);                       // [d0 d0 d1 d1]
        const __m256d den = _mm256_fmadd_pd(dr, dr, zi2);
        const __m256d num = _mm256_fmadd_pd(dr, mask_re, nzi);          // [d0 -zi d1 -zi]
        const __m256d q = _mm256_div_pd(num, den);
        const __m256d vp = _mm256_loadu_pd(dp(p + i));
        acc1 = _mm256_fmadd_pd(dup_re(q), vp, acc1);
        acc2 = _mm256_fmadd_pd(dup_im(q), swap_ri(vp), acc2);
    }
    cplx s = combine_mul(acc1, acc2);
    for (; i < n; ++i) s += p[i] / (z - w[i]);
    return s;
}

cplx resolvent2(cplx z, const double* d0, const double* d1, const cplx* o, int a, int b,
                const cplx* p, std::size_t n) {
    const __m256d zr = _mm256_set1_pd(z.real());
    const __m256d mask_re = _mm256_set_pd(0.0, 1.0, 0.0, 1.0);
    const __m256d zim = _mm256_set_pd(z.imag(), 0.0, z.imag(), 0.0);
    const __m256d conj_sign = _mm256_set_pd(-1.0, 1.0, -1.0, 1.0);
    __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const __m256d v0 = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(d0 + i)), 0b01010000);
        const __m256d v1 = _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(d1 + i)), 0b01010000);
        const __m256d z0 = _mm256_fmadd_pd(_mm256_sub_pd(zr, v0), mask_re, zim);
        const __m256d z1 = _mm256_fmadd_pd(_mm256_sub_pd(zr, v1), mask_re, zim);
        const __m256d vo = _mm256_loadu_pd(dp(o + i));
        const __m256d oo = _mm256_mul_pd(vo, vo);
        // |o|^2 in the real lanes, zero in the imaginary lanes
        const __m256d on = _mm256_mul_pd(_mm256_add_pd(oo, swap_ri(oo)), mask_re);
        const __m256d det = _mm256_sub_pd(cmul(z0, z1), on);
        __m256d num;
        if (a == 0 && b == 0) num = z1;
        else if (a == 1 && b == 1) num = z0;
        else if (a == 0) num = vo;
        else num = _mm256_mul_pd(vo, conj_sign);
        const __m256d dd = _mm256_mul_pd(det, det);
        const __m256d dabs = _mm256_add_pd(dd, swap_ri(dd));
        const __m256d q = _mm256_div_pd(cmul(num, _mm256_mul_pd(det, conj_sign)), dabs);
        const __m256d vp = _mm256_loadu_pd(dp(p + i));
        acc1 = _mm256_fmadd_pd(dup_re(q), vp, acc1);
        acc2 = _mm256_fmadd_pd(dup_im(q), swap_ri(vp), acc2);
    }
    cplx s = combine_mul(acc1, acc2);
    if (i < n) s += scalar_kernels().resolvent2(z, d0 + i, d1 + i, o + i, a, b, p + i, n - i);
    return s;
}

void csr_matvec(const CsrView& A, const cplx* x, cplx* y) {
    const double* xd = dp(x);
    for (std::size_t r = 0; r < A.rows; ++r) {
        std::int32_t j = A.row_ptr[r];
        const std::int32_t end = A.row_ptr[r + 1];
        __m256d acc1 = _mm256_setzero_pd(), acc2 = _mm256_setzero_pd();
        for (; j + 2 <= end; j += 2) {
            const __m256d v = _mm256_loadu_pd(dp(A.vals + j));
            const __m256d xv = _mm256_set_m128d(_mm_loadu_pd(xd + 2 * A.cols[j + 1]),
                                                _mm_loadu_pd(xd + 2 * A.cols[j]));
            acc1 = _mm256_fmadd_pd(dup_re(v), xv, acc1);
            acc2 = _mm256_fmadd_pd(dup_im(v), swap_ri(xv), acc2);
        }
        cplx s = combine_mul(acc1, acc2);
        if (j < end) s += A.vals[j] * x[A.cols[j]];
        y[r] = s;
    }
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{"avx2", dotu, dotc, wdot, axpy, norm2, resolvent1, resolvent2, csr_matvec};
    return t;
}

}  // namespace bathwave::simd
