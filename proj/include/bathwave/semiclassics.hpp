#pragma once

#include <vector>

#include "bathwave/resonant_set.hpp"

namespace bathwave {

// Field strength for flux alpha per plaquette (2 pi alpha through one cell).
double field_strength(const LatticeSpec& spec, double alpha);

enum class OrbitKind { Closed, Open, Undetermined };
const char* to_string(OrbitKind k);

struct OrbitSample {
    double t = 0;
    Vec2 r = Vec2::Zero();
    Vec2 k = Vec2::Zero();  // unwrapped
};

struct OrbitTrace {
    std::vector<OrbitSample> samples;
    double energy = 0;           // omega(k0)
    double max_energy_drift = 0;
    OrbitKind kind = OrbitKind::Undetermined;
    double period = 0;           // time to return to k0 modulo a reciprocal vector
    Vec2 shift_k = Vec2::Zero(); // that reciprocal vector
    Vec2 drift = Vec2::Zero();   // r(period) - r0
};

struct OrbitOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-12;
    double sample_dt = 0;        // output spacing; 0 chooses t_max / 2000
    double max_drift = 1e-8;     // in units of J
    bool stop_at_period = false;
};

// r' = v(k), k' = -v x B with B = 2 pi alpha / A along z (no Berry curvature).
// Negative alpha reverses the field.
OrbitTrace integrate_orbit(const LatticeSpec& spec, int band, const Vec2& k0, const Vec2& r0, double alpha,
                           double t_max, const OrbitOptions& opt = {});

struct OrbitPeriod {
    std::size_t curve = 0;
    Vec2 l = Vec2::Zero();       // (1/B) oint v_hat ds along the direction of motion
    double tau = 0;              // (1/B) oint ds / v
    double transverse_extent = 0;
};

// Quadrature periods of every open component of S; throws ClosedOrbit if S has none.
std::vector<OrbitPeriod> orbit_periods(const ResonantSet& set, double alpha);

}  // namespace bathwave
