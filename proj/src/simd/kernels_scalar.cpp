#include "bathwave/simd/kernels.hpp"

namespace bathwave::simd {
namespace {

cplx dotu(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
        re += a[i].real() * b[i].real() - a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() + a[i].imag() * b[i].real();
    }
    return {re, im};
}

cplx dotc(const cplx* a, const cplx* b, std::size_t n) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
        re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
        im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    }
    return {re, im};
}

cplx wdot(const double* w, const cplx* p, std::size_t n) {
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
        re += w[i] * p[i].real();
        im += w[i] * p[i].imag();
    }
    return {re, im};
}

void axpy(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
    const double ar = alpha.real(), ai = alpha.imag();
    for (std::size_t i = 0; i < n; ++i) {
        const double xr = x[i].real(), xi = x[i].imag();
        y[i] = {y[i].real() + ar * xr - ai * xi, y[i].imag() + ar * xi + ai * xr};
    }
}

double norm2(const cplx* x, std::size_t n) {
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i].real() * x[i].real() + x[i].imag() * x[i].imag();
    return s;
}

cplx resolvent1(cplx z, const double* w, const cplx* p, std::size_t n) {
    const double zr = z.real(), zi = z.imag();
    double re = 0, im = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dr = zr - w[i];
        const double inv = 1.0 / (dr * dr + zi * zi);
        // p / (dr + i zi) = p (dr - i zi) / |.|^2
        const double qr = dr * inv, qi = -zi * inv;
        re += p[i].real() * qr - p[i].imag() * qi;
        im += p[i].real() * qi + p[i].imag() * qr;
    }
    return {re, im};
}

cplx resolvent2(cplx z, const double* d0, const double* d1, const cplx* o, int a, int b,
                const cplx* p, std::size_t n) {
    cplx acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const cplx z0 = z - d0[i], z1 = z - d1[i];
        const cplx det = z0 * z1 - std::norm(o[i]);
        cplx num;
        if (a == 0 && b == 0) num = z1;
        else if (a == 1 && b == 1) num = z0;
        else if (a == 0) num = o[i];
        else num = std::conj(o[i]);
        acc += p[i] * (num / det);
    }
    return acc;
}

void csr_matvec(const CsrView& A, const cplx* x, cplx* y) {
    for (std::size_t r = 0; r < A.rows; ++r) {
        double re = 0, im = 0;
        for (std::int32_t j = A.row_ptr[r]; j < A.row_ptr[r + 1]; ++j) {
            const cplx v = A.vals[j], xv = x[A.cols[j]];
            re += v.real() * xv.real() - v.imag() * xv.imag();
            im += v.real() * xv.imag() + v.imag() * xv.real();
        }
        y[r] = {re, im};
    }
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable t{"scalar", dotu, dotc, wdot, axpy, norm2, resolvent1, resolvent2, csr_matvec};
    return t;
}

}  // namespace bathwave::simd
