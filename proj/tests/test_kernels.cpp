#include <doctest.h>

#include <random>
#include <vector>

#include "bathwave/simd/kernels.hpp"

using namespace bathwave::simd;

namespace {

struct Data {
    std::vector<cplx> a, b, p, o;
    std::vector<double> w, d0, d1;
};

Data make(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Data d;
    for (std::size_t i = 0; i < n; ++i) {
        d.a.emplace_back(u(rng), u(rng));
        d.b.emplace_back(u(rng), u(rng));
        d.p.emplace_back(u(rng), u(rng));
        d.o.emplace_back(u(rng), u(rng));
        d.w.push_back(3 * u(rng));
        d.d0.push_back(2 * u(rng));
        d.d1.push_back(2 * u(rng));
    }
    return d;
}

void check_close(cplx x, cplx y, double scale) { CHECK(std::abs(x - y) <= 1e-12 * scale); }

std::vector<const KernelTable*> variants() {
    std::vector<const KernelTable*> v;
    if (auto* t = avx2_kernels()) v.push_back(t);
    if (auto* t = neon_kernels()) v.push_back(t);
    return v;
}

}  // namespace

TEST_CASE("vector kernels match the scalar reference") {
    const auto& ref = scalar_kernels();
    for (const KernelTable* t : variants()) {
        CAPTURE(t->name);
        // odd lengths exercise the remainder paths
        for (std::size_t n : {0u, 1u, 2u, 3u, 7u, 64u, 1001u}) {
            CAPTURE(n);
            Data d = make(n, 17 + n);
            const double s = 1.0 + n;
            check_close(t->dotu(d.a.data(), d.b.data(), n), ref.dotu(d.a.data(), d.b.data(), n), s);
            check_close(t->dotc(d.a.data(), d.b.data(), n), ref.dotc(d.a.data(), d.b.data(), n), s);
            check_close(t->wdot(d.w.data(), d.p.data(), n), ref.wdot(d.w.data(), d.p.data(), n), s);
            CHECK(std::abs(t->norm2(d.a.data(), n) - ref.norm2(d.a.data(), n)) <= 1e-12 * s);
            std::vector<cplx> y1 = d.b, y2 = d.b;
            t->axpy({0.3, -1.7}, d.a.data(), y1.data(), n);
            ref.axpy({0.3, -1.7}, d.a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) check_close(y1[i], y2[i], 1.0);
            for (double eta : {0.5, 0.01}) {
                const cplx z{0.37, eta};
                const double rs = s / (eta * eta);
                check_close(t->resolvent1(z, d.w.data(), d.p.data(), n),
                            ref.resolvent1(z, d.w.data(), d.p.data(), n), rs);
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b)
                        check_close(t->resolvent2(z, d.d0.data(), d.d1.data(), d.o.data(), a, b, d.p.data(), n),
                                    ref.resolvent2(z, d.d0.data(), d.d1.data(), d.o.data(), a, b, d.p.data(), n),
                                    rs);
            }
        }
    }
}

TEST_CASE("csr matvec variants agree on a ragged matrix") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t rows = 257;
    std::vector<std::int32_t> rp{0}, cols;
    std::vector<cplx> vals, x(rows);
    for (auto& v : x) v = {u(rng), u(rng)};
    for (std::size_t r = 0; r < rows; ++r) {
        const int nnz = static_cast<int>(r % 6);
        for (int j = 0; j < nnz; ++j) {
            cols.push_back(static_cast<std::int32_t>((r * 7 + j * 13) % rows));
            vals.emplace_back(u(rng), u(rng));
        }
        rp.push_back(static_cast<std::int32_t>(cols.size()));
    }
    CsrView A{rows, rp.data(), cols.data(), vals.data()};
    std::vector<cplx> y_ref(rows), y(rows);
    scalar_kernels().csr_matvec(A, x.data(), y_ref.data());
    for (const KernelTable* t : variants()) {
        t->csr_matvec(A, x.data(), y.data());
        for (std::size_t r = 0; r < rows; ++r) check_close(y[r], y_ref[r], 10.0);
    }
}

TEST_CASE("resolvent2 reproduces a direct 2x2 inverse") {
    const cplx z{0.2, 0.3};
    const double d0 = 0.7, d1 = -0.4;
    const cplx o{0.5, -0.25}, p{1.0, 0.0};
    // (z - h)^-1 by Cramer's rule
    const cplx m00 = z - d0, m11 = z - d1, m01 = -o, m10 = -std::conj(o);
    const cplx det = m00 * m11 - m01 * m10;
    const cplx inv[2][2] = {{m11 / det, -m01 / det}, {-m10 / det, m00 / det}};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            check_close(kernels().resolvent2(z, &d0, &d1, &o, a, b, &p, 1), inv[a][b], 1.0);
}

TEST_CASE("dispatch honours the scalar override") {
    CHECK(!kernels().name.empty());
    if (avx2_kernels()) CHECK(avx2_kernels()->name == "avx2");
}
