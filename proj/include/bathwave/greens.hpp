#pragma once

#include <vector>

#include "bathwave/resonant_set.hpp"

namespace bathwave {

// rho = r - r' with r on sublattice i and r' on sublattice ip.
struct Separation {
    Vec2 rho = Vec2::Zero();
    int i = 0;
    int ip = 0;
};

// Dissipative part: Gamma = A / (2 pi) sum_curves oint e^{i k.rho} U_i U*_ip / v ds.
cplx gamma(const ResonantSet& set, const Separation& r);
std::vector<cplx> gamma_by_curve(const ResonantSet& set, const Separation& r);

struct OmegaOptions {
    double shell = 0;          // energy half-width of the bump split, 0 picks half the distance to the nearest singular energy
    double max_shell = 1.0;    // in units of J
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int min_grid = 256;
    int max_grid = 16384;
    int min_level = 3;         // tanh-sinh refinement levels, step 2^-level
    int max_level = 7;
    double phase_step = 0.25;  // contour step times the largest |rho|
};

struct OmegaResult {
    cplx value{0, 0};
    double error = 0;          // estimated absolute error
    double shell = 0;
    int grid = 0;
    int energy_nodes = 0;
};

// Coherent part Omega = A PV int d^2k / (2pi)^2 e^{i k.rho} U U* / (Delta - omega), all bands.
// The principal value comes from integrating the logarithm by parts inside an energy shell;
// the remainder is a smooth periodic integrand summed on a doubling BZ grid.
std::vector<OmegaResult> omega_exact(const LatticeSpec& spec, double delta, const std::vector<Separation>& seps,
                                     const OmegaOptions& opt = {});
OmegaResult omega_exact(const ResonantSet& set, const Separation& r, const OmegaOptions& opt = {});

struct BruteOptions {
    double eta0 = 0.064;       // largest broadening, halved at every level
    int levels = 4;
    double resolution = 25.0;  // grid points per unit of eta / v_max
    int max_grid = 24576;
};

struct BruteResult {
    cplx g{0, 0};              // G(rho) = Omega - i Gamma / 2, extrapolated to eta -> 0
    cplx omega{0, 0};
    cplx gamma{0, 0};
    double error = 0;          // difference between the two highest extrapolation orders
    std::vector<double> etas;
    std::vector<cplx> raw;     // G at each eta
};

// Independent reference: resolvent at Delta + i eta on a dense BZ grid, Richardson in eta.
BruteResult omega_brute(const LatticeSpec& spec, double delta, const Separation& r, const BruteOptions& opt = {});

// Default tube width: half the smallest radius of curvature of S.
double default_tube_width(const ResonantSet& set);
// Largest admissible width, 0.9 / max |K|.
double max_tube_width(const ResonantSet& set);

// G ~ -(i A / 2) oint (1 + Theta_{rho eps}(rho_hat . v_hat)) e^{i k.rho} U U* / (2 pi v) ds
cplx tube_approximant(const ResonantSet& set, const Separation& r, double eps = 0);

// Leading stationary-phase term from points with v parallel to rho.
cplx stationary_phase(const ResonantSet& set, const Separation& r);

// Exchange and dissipative couplings of two emitters with coupling g: g^2 G.
struct SpinCoupling {
    cplx g2_omega{0, 0};
    cplx g2_gamma{0, 0};
    cplx g2_green{0, 0};
};
SpinCoupling spin_coupling(const ResonantSet& set, const Separation& r, double g, const OmegaOptions& opt = {});

// Integer cell offset of a separation; throws Validation when rho is not a lattice displacement.
std::array<int, 2> cell_offset(const LatticeSpec& spec, const Separation& r);

}  // namespace bathwave
