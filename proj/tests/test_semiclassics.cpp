#include <doctest.h>

#include <cmath>

#include "bathwave/greens.hpp"
#include "bathwave/semiclassics.hpp"

using namespace bathwave;

TEST_CASE("open-orbit spatial period is a/alpha along y") {
    for (double jy : {1.5, 2.0, 3.0}) {
        const auto spec = build_square(1, jy);
        const auto set = extract(spec, 0, -(jy - 1));
        const auto p = orbit_periods(set, 0.01);
        REQUIRE(p.size() == 2);
        for (const auto& q : p) {
            CAPTURE(jy);
            CHECK(std::abs(q.l.norm() - 100) < 0.1);
            CHECK(std::abs(q.l.x()) < 1e-6);
        }
        // the two open sheets are related by inversion and drift oppositely
        CHECK((p[0].l + p[1].l).norm() < 1e-6);
        CHECK(std::abs(p[0].tau - p[1].tau) < 1e-8 * p[0].tau);
    }
}

TEST_CASE("doubling the flux halves both periods") {
    const auto set = extract(build_square(1, 2), 0, -1);
    const auto a = orbit_periods(set, 0.01), b = orbit_periods(set, 0.02);
    CHECK(std::abs(b[0].l.norm() * 2 - a[0].l.norm()) < 1e-9 * a[0].l.norm());
    CHECK(std::abs(b[0].tau * 2 - a[0].tau) < 1e-9 * a[0].tau);
    CHECK(std::abs(b[0].transverse_extent * 2 - a[0].transverse_extent) < 1e-9 * a[0].transverse_extent);
}

TEST_CASE("ODE drift agrees with quadrature periods and conserves energy") {
    const auto spec = build_square(1, 2);
    const auto set = extract(spec, 0, -1);
    for (double alpha : {0.005, 0.01, 0.02}) {
        CAPTURE(alpha);
        const auto p = orbit_periods(set, alpha);
        for (const auto& q : p) {
            const Vec2 k0 = set.curves[q.curve].points[17].k;
            OrbitOptions o;
            o.stop_at_period = true;
            const auto tr = integrate_orbit(spec, 0, k0, Vec2(3, -4), alpha, 2 * q.tau, o);
            CHECK(tr.kind == OrbitKind::Open);
            CHECK(std::abs(tr.period - q.tau) < 0.01 * q.tau);
            CHECK((tr.drift - q.l).norm() < 0.01 * q.l.norm());
            CHECK(tr.max_energy_drift < 1e-8);
            // k stays on S, and r - r0 = -z x (k - k0) / B
            const double b = field_strength(spec, alpha);
            for (const auto& s : tr.samples) {
                const Vec2 dk = s.k - k0;
                CHECK((s.r - Vec2(3, -4) - Vec2(dk.y(), -dk.x()) / b).norm() < 1e-6 * q.l.norm());
            }
        }
    }
}

TEST_CASE("time reversal reverses the drift") {
    const auto spec = build_square(1, 2);
    const auto set = extract(spec, 0, -1);
    const Vec2 k0 = set.curves[0].points[40].k;
    OrbitOptions o;
    o.stop_at_period = true;
    const auto fwd = integrate_orbit(spec, 0, k0, Vec2::Zero(), 0.01, 100, o);
    const auto rev = integrate_orbit(spec, 0, -k0, Vec2::Zero(), -0.01, 100, o);
    REQUIRE(fwd.kind == OrbitKind::Open);
    REQUIRE(rev.kind == OrbitKind::Open);
    CHECK((fwd.drift + rev.drift).norm() < 1e-6);
    CHECK(std::abs(fwd.period - rev.period) < 1e-6);
    // flipping B alone walks the same sheet backwards in k and keeps the drift
    const auto flip = integrate_orbit(spec, 0, k0, Vec2::Zero(), -0.01, 100, o);
    CHECK((flip.shift_k + fwd.shift_k).norm() < 1e-9);
    CHECK((flip.drift - fwd.drift).norm() < 1e-6);
}

TEST_CASE("closed Fermi surface gives bounded cyclotron motion") {
    const auto spec = build_square(1, 1);
    const auto set = extract(spec, 0, -1);
    CHECK_THROWS_AS(orbit_periods(set, 0.01), Error);
    try {
        orbit_periods(set, 0.01);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ClosedOrbit);
    }
    OrbitOptions o;
    o.stop_at_period = true;
    double period = 0;
    for (int j : {0, 100, 333}) {
        const auto tr = integrate_orbit(spec, 0, set.curves[0].points[j].k, Vec2::Zero(), 0.01, 1000, o);
        CHECK(tr.kind == OrbitKind::Closed);
        CHECK(tr.drift.norm() < 1e-6);
        // period independent of the starting point on S
        if (period == 0) period = tr.period;
        CHECK(std::abs(tr.period - period) < 1e-6 * period);
    }
    const auto tr2 = integrate_orbit(spec, 0, set.curves[0].points[0].k, Vec2::Zero(), 0.02, 1000, o);
    CHECK(std::abs(tr2.period * 2 - period) < 1e-6 * period);
}

TEST_CASE("temporal period relates to local density of states") {
    // Gamma(0) = A/(2 pi) oint ds/v, and tau = (1/B) oint ds/v summed over one open sheet
    const auto set = extract(build_square(1, 2), 0, -1);
    const double g0 = gamma(set, {Vec2::Zero(), 0, 0}).real();
    const double alpha = 0.01;
    const auto p = orbit_periods(set, alpha);
    CHECK(std::abs(p[0].tau + p[1].tau - g0 / (2 * alpha) * 2) < 1e-8 * p[0].tau);
    CHECK(std::abs(p[0].tau - g0 / (2 * alpha)) < 1e-8 * p[0].tau);
}

TEST_CASE("orbit input validation") {
    const auto spec = build_square(1, 2);
    CHECK_THROWS_AS(integrate_orbit(spec, 0, Vec2(1, 1), Vec2::Zero(), 0.0, 10), Error);
    CHECK_THROWS_AS(integrate_orbit(spec, 0, Vec2(1, 1), Vec2::Zero(), 0.01, -1), Error);
    CHECK_THROWS_AS(integrate_orbit(spec, 3, Vec2(1, 1), Vec2::Zero(), 0.01, 10), Error);
    const auto set = extract(spec, 0, -1);
    CHECK_THROWS_AS(orbit_periods(set, -0.01), Error);
}
