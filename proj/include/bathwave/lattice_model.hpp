#pragma once

#include <Eigen/Core>
#include <array>
#include <complex>
#include <string>
#include <vector>

#include "bathwave/error.hpp"

namespace bathwave {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
constexpr int kMaxBands = 4;
using BlochMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxBands, kMaxBands>;

struct Sublattice {
    std::string name;
    Vec2 position = Vec2::Zero();
};

// H contains amplitude * a^dag_{R, from} a_{R + cell, to}; the hermitian
// partner must be listed explicitly.
struct Coupling {
    int from = 0;
    int to = 0;
    std::array<int, 2> cell{0, 0};
    cplx amplitude{0.0, 0.0};
};

struct LatticeSpec {
    std::array<Vec2, 2> a{Vec2(1, 0), Vec2(0, 1)};
    std::vector<Sublattice> sublattices;
    std::vector<Coupling> couplings;
    double length_unit = 1.0;   // a
    double energy_unit = 1.0;   // J

    int bands() const { return static_cast<int>(sublattices.size()); }
    double cell_area() const;
    // reciprocal vectors with a_i . b_j = 2 pi delta_ij
    std::array<Vec2, 2> reciprocal() const;
    Vec2 cell_vector(int n1, int n2) const { return n1 * a[0] + n2 * a[1]; }
    // displacement that enters the Bloch phase of a coupling
    Vec2 hop_vector(const Coupling& c) const;
    void validate() const;
};

LatticeSpec build_square(double jx, double jy, double a = 1.0);
// a is the nearest-neighbour distance; j2 hops along +-a1 and +-a2 on both sublattices
LatticeSpec build_honeycomb(double j1, double j2, double a = 1.0);

struct BlochSample {
    std::vector<double> energies;  // ascending
    BlochMatrix vectors;           // column nu is U_nu
};

BlochMatrix bloch_hamiltonian(const LatticeSpec& spec, const Vec2& k);
BlochSample bloch(const LatticeSpec& spec, const Vec2& k);

struct DispersionDerivatives {
    double omega = 0;
    Vec2 v = Vec2::Zero();
    Eigen::Matrix2d hessian = Eigen::Matrix2d::Zero();
};

// Gap below which a band is treated as degenerate, in units of J.
constexpr double kDegenerateGap = 1e-8;

DispersionDerivatives derivatives(const LatticeSpec& spec, const Vec2& k, int band);

// Everything a contour integrand needs at one k: energy, velocity, Hessian,
// band projector P = U U^dag and its gradient.
struct BandLocal {
    DispersionDerivatives d;
    BlochMatrix projector;
    std::array<BlochMatrix, 2> projector_grad;
};
BandLocal band_local(const LatticeSpec& spec, const Vec2& k, int band);

// Single-band energy only (cheap path for grids).
double band_energy(const LatticeSpec& spec, const Vec2& k, int band);

struct BandExtrema {
    double min = 0, max = 0;
    std::vector<double> critical;     // energies with grad omega = 0, including extrema
    std::vector<double> degenerate;   // energies where this band touches a neighbour
};
BandExtrema band_extrema(const LatticeSpec& spec, int band);

// Distance from delta to the nearest Van Hove or degeneracy energy of the band.
double singular_distance(const LatticeSpec& spec, int band, double delta);

std::string to_json(const LatticeSpec& spec);
LatticeSpec lattice_from_json(const std::string& text);

}  // namespace bathwave
