#pragma once

#include <array>
#include <vector>

#include "bathwave/fit.hpp"
#include "bathwave/greens.hpp"

namespace bathwave {

// A primitive lattice displacement p a1 + q a2 used as a scan direction.
struct LatticeDirection {
    std::array<int, 2> cell{1, 0};
    Vec2 vector = Vec2::Zero();
    double theta = 0;  // polar angle of vector
};

// Shortest primitive cell vector whose angle is within tol of theta (|p|,|q| <= max_index).
LatticeDirection lattice_direction(const LatticeSpec& spec, double theta, double tol, int max_index = 400);

struct GhostOptions {
    double kappa_rho_min = 4;    // fit window in units of the decay length
    double kappa_rho_max = 16;
    int samples = 16;
    double rho_start = 8;
    double rho_cap = 40000;
    double floor = 1e-11;        // relative to the curve's value at rho = 0
    double angle_tol = 0.1;      // relative to |theta - theta_c|; the exact lattice angle is used afterwards
};

struct DecayFit {
    LatticeDirection direction;
    double kappa = 0;
    double r2 = 0;
    std::vector<double> rho;
    std::vector<double> log_envelope;  // log(|Gamma_c| sqrt(rho)) of the dominant curve
};

// Decay rate of Gamma along a lattice direction with no real stationary point on S.
// Each resonant curve contributes a single complex saddle, so |Gamma_c| is already the envelope.
DecayFit ghost_decay(const ResonantSet& set, const LatticeDirection& dir, const GhostOptions& opt = {});

struct GhostScan {
    double theta_c = 0;
    std::vector<DecayFit> fits;
    std::vector<double> dtheta;  // |theta - theta_c| of each fitted direction
    double exponent = 0;         // kappa = prefactor |theta - theta_c|^exponent
    double prefactor = 0;
    double r2 = 0;
    double kappa_model(double dtheta) const;
};

// Throws FitUnreliable if a decay fit or the power fit has R^2 < 0.98.
GhostScan ghost_scan(const ResonantSet& set, double theta_c, const std::vector<double>& thetas,
                     const GhostOptions& opt = {});

}  // namespace bathwave
