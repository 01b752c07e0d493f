#include <doctest.h>

#include <cmath>
#include <numbers>

#include "bathwave/resonant_set.hpp"

using namespace bathwave;
constexpr double kPi = std::numbers::pi;

namespace {

double angle(const Vec2& v) { return std::atan2(v.y(), v.x()); }

}  // namespace

TEST_CASE("closed orbit of the isotropic square lattice") {
    const auto set = extract(build_square(1, 1), 0, -1.0);
    REQUIRE(set.curves.size() == 1);
    const auto& c = set.curves[0];
    CHECK(c.closed);
    CHECK(c.orientation == 1);
    for (const auto& p : c.points) {
        CHECK(std::abs(band_energy(set.spec, p.k, 0) + 1.0) < 1e-12);
        // K m_T v = -1 pointwise
        CHECK(p.curvature * p.transverse_mass() * p.speed == doctest::Approx(-1.0).epsilon(1e-12));
    }
    const auto w = winding(set);
    CHECK(w.rounded == 1);
    CHECK(w.residual < 1e-6);
    CHECK(caustics(set).empty());
}

TEST_CASE("hole-like orbit keeps unit winding") {
    const auto set = extract(build_square(1, 1), 0, 1.0);
    REQUIRE(set.curves.size() == 1);
    CHECK(set.curves[0].orientation == -1);
    CHECK(winding(set).rounded == 1);
    CHECK(winding(set).residual < 1e-6);
}

TEST_CASE("open orbits have zero winding along a deformation family") {
    for (double r : {1.5, 2.0, 3.0}) {
        CAPTURE(r);
        // delta = -(Jy - Jx) stays inside the open-orbit window for every ratio
        const auto set = extract(build_square(1, r), 0, -(r - 1.0));
        REQUIRE(set.curves.size() == 2);
        for (const auto& c : set.curves) CHECK(!c.closed);
        CHECK(winding(set).rounded == 0);
        CHECK(winding(set).residual < 1e-6);
    }
}

TEST_CASE("Gauss map turning rate equals the curvature") {
    for (const auto& [spec, band, delta] :
         {std::tuple{build_square(1, 2), 0, -1.0}, std::tuple{build_honeycomb(1, 0.25), 0, -1.5},
          std::tuple{build_square(1, 1), 0, -1.0}}) {
        const auto set = extract(spec, band, delta);
        for (std::size_t ci = 0; ci < set.curves.size(); ++ci) {
            const auto& c = set.curves[ci];
            const std::size_t n = c.points.size();
            for (std::size_t i = 0; i + 1 < n; i += 7) {
                const double s = c.points[i].s, h = 1e-4;
                double d = angle(point_at(set, ci, s + h).v) - angle(point_at(set, ci, s - h).v);
                d -= 2 * kPi * std::round(d / (2 * kPi));
                CHECK(d / (2 * h) == doctest::Approx(c.points[i].curvature).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("arclength does not depend on the seed grid") {
    ExtractOptions coarse;
    coarse.grid_n = 128;
    const auto a = extract(build_square(1, 2), 0, -1.0);
    const auto b = extract(build_square(1, 2), 0, -1.0, coarse);
    CHECK(a.total_length() == doctest::Approx(b.total_length()).epsilon(1e-9));
}

TEST_CASE("arclength matches an independent fine polyline") {
    // polyline through exact crossings of vertical grid lines, branch ky > 0 of square(1, 2)
    const int n = 200000;
    double L = 0;
    Vec2 prev;
    for (int i = 0; i <= n; ++i) {
        const double kx = -kPi + 2 * kPi * i / n;
        const Vec2 p(kx, std::acos((-1.0 - 2 * std::cos(kx)) / 4));
        if (i) L += (p - prev).norm();
        prev = p;
    }
    const auto set = extract(build_square(1, 2), 0, -1.0);
    CHECK(set.curves[0].length == doctest::Approx(L).epsilon(1e-8));
}

TEST_CASE("caustics of the anisotropic square lattice") {
    const auto set = extract(build_square(1, 2), 0, -1.0);
    const auto cs = caustics(set);
    REQUIRE(cs.size() == 4);
    for (const auto& c : cs) {
        CHECK(c.order == 1);
        CHECK(std::abs(c.curvature) < 1e-8);
        // by mirror symmetry all four share |tan| of the cutoff direction
        CHECK(std::abs(c.direction.y() / c.direction.x()) ==
              doctest::Approx(std::abs(cs[0].direction.y() / cs[0].direction.x())).epsilon(1e-8));
    }
}

TEST_CASE("next-nearest honeycomb hosts an order-2 caustic along y") {
    const auto set = extract(build_honeycomb(1, 0.25), 0, -1.5);
    int found = 0;
    for (const auto& c : caustics(set))
        if (c.order == 2) {
            ++found;
            CHECK(std::abs(c.direction.x()) < 1e-8);
            CHECK(std::abs(c.curvature) < 1e-10);
        }
    CHECK(found == 2);
}

TEST_CASE("directional cross section") {
    SUBCASE("integrates to the density of states on a convex curve") {
        const auto set = extract(build_square(1, 1), 0, -1.0);
        const int n = 720;
        double integral = 0;
        for (int i = 0; i < n; ++i) {
            const double th = 2 * kPi * (i + 0.5) / n;
            integral += directional_cross_section(set, Vec2(std::cos(th), std::sin(th))).sigma * 2 * kPi / n;
        }
        double dos = 0;
        for (const auto& p : set.curves[0].points) dos += set.curves[0].step / p.speed;
        dos *= set.spec.cell_area() / (4 * kPi * kPi);
        CHECK(integral == doctest::Approx(dos).epsilon(1e-4));
    }
    SUBCASE("vanishes beyond the caustic and flags caustic directions") {
        const auto set = extract(build_square(1, 2), 0, -1.0);
        CHECK(directional_cross_section(set, Vec2(1, 0)).sigma == 0.0);
        CHECK(directional_cross_section(set, Vec2(0, 1)).sigma > 0.0);
        const auto c = caustics(set).front();
        CHECK(directional_cross_section(set, c.direction).diverges_at_caustic);
    }
}

TEST_CASE("edge cases of extraction") {
    CHECK(extract(build_square(1, 1), 0, 4.5).empty());
    CHECK_THROWS_AS(extract(build_square(1, 1), 0, 0.0), Error);
    CHECK_THROWS_AS(extract(build_square(1, 1), 3, -1.0), Error);
    try {
        extract(build_square(1, 2), 0, 2.0 + 1e-4);
        FAIL("expected a Van Hove error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::VanHove);
    }
    const auto set = extract(build_square(1, 1), 0, -1.0);
    CHECK(to_csv(set).rfind("curve_id,s,k_x,k_y,v_x,v_y,K,mT\n", 0) == 0);
}

TEST_CASE("point_at follows the curve across the period") {
    const auto set = extract(build_square(1, 2), 0, -1.0);
    const auto& c = set.curves[0];
    const auto p = point_at(set, 0, c.length + 0.3);
    const auto q = point_at(set, 0, 0.3);
    CHECK((p.k - q.k - c.shift_k).norm() < 1e-10);
    CHECK(std::abs(band_energy(set.spec, p.k, 0) + 1.0) < 1e-12);
}
