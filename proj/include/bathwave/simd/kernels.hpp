#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace bathwave::simd {

using cplx = std::complex<double>;

struct CsrView {
    std::size_t rows = 0;
    const std::int32_t* row_ptr = nullptr;
    const std::int32_t* cols = nullptr;
    const cplx* vals = nullptr;
};

// Every entry point has a scalar reference; vector variants must agree with it
// to rounding. Arrays carry no alignment requirement.
struct KernelTable {
    std::string_view name;
    // sum_i a_i * b_i
    cplx (*dotu)(const cplx* a, const cplx* b, std::size_t n);
    // sum_i conj(a_i) * b_i
    cplx (*dotc)(const cplx* a, const cplx* b, std::size_t n);
    // sum_i w_i * p_i with real weights
    cplx (*wdot)(const double* w, const cplx* p, std::size_t n);
    // y += alpha * x
    void (*axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
    double (*norm2)(const cplx* x, std::size_t n);
    // sum_i p_i / (z - w_i)
    cplx (*resolvent1)(cplx z, const double* w, const cplx* p, std::size_t n);
    // sum_i p_i [(z - h_i)^-1]_{a b} for 2x2 Hermitian h = [[d0, o], [conj o, d1]]
    cplx (*resolvent2)(cplx z, const double* d0, const double* d1, const cplx* o,
                       int a, int b, const cplx* p, std::size_t n);
    // y = A x
    void (*csr_matvec)(const CsrView& A, const cplx* x, cplx* y);
};

const KernelTable& scalar_kernels();
// nullptr when the CPU or the build lacks the variant
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// Best available table; BATHWAVE_SIMD=scalar forces the reference path.
const KernelTable& kernels();

}  // namespace bathwave::simd
