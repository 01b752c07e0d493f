#include <doctest.h>

#include <cmath>
#include <random>

#include "bathwave/lattice_model.hpp"

using namespace bathwave;

TEST_CASE("square dispersion matches the cosine band") {
    const auto s = build_square(1.0, 2.0);
    s.validate();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-M_PI, M_PI);
    for (int t = 0; t < 50; ++t) {
        const Vec2 k(u(rng), u(rng));
        const double w = 2 * std::cos(k.x()) + 4 * std::cos(k.y());
        CHECK(bloch(s, k).energies[0] == doctest::Approx(w).epsilon(1e-13));
        const auto d = derivatives(s, k, 0);
        CHECK(d.v.x() == doctest::Approx(-2 * std::sin(k.x())).epsilon(1e-12));
        CHECK(d.hessian(1, 1) == doctest::Approx(-4 * std::cos(k.y())).epsilon(1e-12));
        CHECK(std::abs(d.hessian(0, 1)) < 1e-13);
    }
}

TEST_CASE("bloch matrix is hermitian and periodic in the reciprocal lattice") {
    const auto s = build_honeycomb(1.0, 0.25);
    const auto b = s.reciprocal();
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int t = 0; t < 20; ++t) {
        const Vec2 k(u(rng), u(rng));
        const auto h = bloch_hamiltonian(s, k);
        CHECK((h - h.adjoint()).norm() < 1e-13);
        const auto e0 = bloch(s, k).energies, e1 = bloch(s, k + b[0] - 2 * b[1]).energies;
        for (int n = 0; n < 2; ++n) CHECK(e0[n] == doctest::Approx(e1[n]).epsilon(1e-12));
    }
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(s.a[i].dot(b[j]) == doctest::Approx(i == j ? 2 * M_PI : 0.0).scale(1.0));
}

TEST_CASE("analytic derivatives agree with finite differences") {
    for (const auto& s : {build_square(1.0, 1.7), build_honeycomb(1.0, 0.25), build_honeycomb(1.0, 0.0)}) {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-2.5, 2.5);
        for (int t = 0; t < 30; ++t) {
            const Vec2 k(u(rng), u(rng));
            for (int band = 0; band < s.bands(); ++band) {
                const auto L = band_local(s, k, band);
                const double h = 1e-5;
                for (int a = 0; a < 2; ++a) {
                    const Vec2 e = Vec2::Unit(a) * h;
                    const double fd = (band_energy(s, k + e, band) - band_energy(s, k - e, band)) / (2 * h);
                    CHECK(L.d.v[a] == doctest::Approx(fd).epsilon(1e-7).scale(1.0));
                    const auto dp = derivatives(s, k + e, band), dm = derivatives(s, k - e, band);
                    for (int b = 0; b < 2; ++b)
                        CHECK(L.d.hessian(b, a) == doctest::Approx((dp.v[b] - dm.v[b]) / (2 * h)).epsilon(1e-6).scale(1.0));
                    // projector gradient is gauge invariant, so differences are meaningful
                    const auto Pp = band_local(s, k + e, band).projector, Pm = band_local(s, k - e, band).projector;
                    CHECK((L.projector_grad[a] - (Pp - Pm) / (2 * h)).norm() < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("degenerate points are rejected") {
    const auto s = build_honeycomb(1.0, 0.0);
    // Dirac point of the nearest-neighbour model
    const Vec2 K(2 * M_PI / 3, 2 * M_PI / (3 * std::sqrt(3.0)));
    CHECK(std::abs(band_energy(s, K, 1) - band_energy(s, K, 0)) < 1e-12);
    CHECK_THROWS_AS(derivatives(s, K, 0), Error);
}

TEST_CASE("critical energies of the square lattice") {
    const auto ex = band_extrema(build_square(1.0, 2.0), 0);
    REQUIRE(ex.critical.size() == 4);
    const double want[] = {-6, -2, 2, 6};
    for (int i = 0; i < 4; ++i) CHECK(ex.critical[i] == doctest::Approx(want[i]).epsilon(1e-10));
    CHECK(ex.min == doctest::Approx(-6));
    CHECK(ex.max == doctest::Approx(6));
    CHECK(singular_distance(build_square(1.0, 2.0), 0, -1.0) == doctest::Approx(1.0));
}

TEST_CASE("honeycomb band structure landmarks") {
    const auto s = build_honeycomb(1.0, 0.0);
    const auto up = band_extrema(s, 1);
    CHECK(up.max == doctest::Approx(3.0).epsilon(1e-10));
    REQUIRE(up.degenerate.size() == 1);
    CHECK(std::abs(up.degenerate[0]) < 1e-6);
    bool saddle = false;
    for (double e : up.critical) saddle |= std::abs(e - 1.0) < 1e-9;
    CHECK(saddle);
    // next-nearest hopping shifts the Gamma point of the lower band to 4T - 3
    const auto t = build_honeycomb(1.0, 0.25);
    CHECK(band_energy(t, Vec2::Zero(), 0) == doctest::Approx(-2.0));
}

TEST_CASE("lattice json round trip") {
    const auto s = build_honeycomb(1.0, 0.25, 1.0);
    const auto r = lattice_from_json(to_json(s));
    REQUIRE(r.bands() == 2);
    CHECK(r.couplings.size() == s.couplings.size());
    const Vec2 k(0.3, -1.1);
    CHECK((bloch_hamiltonian(r, k) - bloch_hamiltonian(s, k)).norm() < 1e-14);
    CHECK_THROWS_AS(lattice_from_json(R"({"lattice_vectors":[[1,0],[0,1]],"sublattices":[{"position":[0,0]}],
        "couplings":[{"from":0,"to":0,"cell":[1,0],"amplitude":1}]})"),
                    Error);
}
