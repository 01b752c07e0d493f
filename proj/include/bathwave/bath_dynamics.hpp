#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "bathwave/error.hpp"
#include "bathwave/simd/kernels.hpp"

namespace bathwave {

using cplx = std::complex<double>;

// Site coordinates are integers centred on the lattice: x runs over
// [-(nx/2), nx - 1 - nx/2], likewise y, so (0, 0) is the central site.
struct Emitter {
    int x = 0;
    int y = 0;
    double delta = -1;
    double g = 0.1;
};

struct SimulationConfig {
    int nx = 61;
    int ny = 401;
    double jx = 1;
    double jy = 2;
    double alpha = 0;        // flux per plaquette / 2 pi
    std::vector<Emitter> emitters;
    std::vector<std::array<int, 2>> obstructions;
    double chi = 0;          // on-site disorder X J, X ~ U[-chi, chi]
    std::uint64_t seed = 0;

    int sites() const { return nx * ny; }
    int dimension() const { return sites() + static_cast<int>(emitters.size()); }
    int x_min() const { return -(nx / 2); }
    int y_min() const { return -(ny / 2); }
    bool contains(int x, int y) const;
    int site_index(int x, int y) const;   // row-major in x, throws if outside
    std::array<int, 2> site_coords(int index) const;
    void validate() const;
};

std::string to_json(const SimulationConfig& c);
SimulationConfig config_from_json(const std::string& text);

// Single-excitation Hamiltonian in CSR form. Bath sites come first, then emitters.
struct SparseHamiltonian {
    int dim = 0;
    std::vector<std::int32_t> row_ptr;
    std::vector<std::int32_t> cols;
    std::vector<cplx> vals;

    simd::CsrView view() const { return {static_cast<std::size_t>(dim), row_ptr.data(), cols.data(), vals.data()}; }
    cplx at(int i, int j) const;
    // Gershgorin bound on the spectral radius
    double norm_bound() const;
};

// Disorder realization r draws from its own stream seeded by (config.seed, r).
SparseHamiltonian build_hamiltonian(const SimulationConfig& c, std::uint64_t realization = 0);

// Phase sum around the plaquette with lower-left corner (x, y), counter-clockwise,
// of arg H_{ij} for each hop i -> j along the loop. Equals 2 pi alpha (mod 2 pi).
double plaquette_flux(const SparseHamiltonian& h, const SimulationConfig& c, int x, int y);

struct ExcitationState {
    std::vector<cplx> c;     // emitters
    std::vector<cplx> psi;   // bath, indexed like SimulationConfig::site_index
    double t = 0;

    double norm2() const;
};

ExcitationState excited_emitter(const SimulationConfig& c, int which);
// (|eg> - |ge>)/sqrt 2 or (|egg> - 2|geg> + |gge>)/sqrt 6, bath empty
ExcitationState dark_state(const SimulationConfig& c, int n_emitters);

struct EvolveOptions {
    std::vector<double> snapshot_times;   // full bath population recorded at these times
    double step_tol = 1e-9;               // Krylov error per step
    int krylov_dim = 30;
    double max_norm_drift = 1e-6;
};

struct EvolveResult {
    std::vector<double> times;
    std::vector<std::vector<double>> emitter_pop;   // [time][emitter]
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> snapshots;     // [snapshot][site]
    double norm_drift = 0;
    double edge_pop = 0;                            // max population on the outermost ring
    std::size_t steps = 0;
    std::size_t matvecs = 0;
};

// Propagates i d/dt psi = H psi with an adaptive Lanczos exponential; t_grid must be
// increasing and start at or after initial.t.
EvolveResult evolve(const SparseHamiltonian& h, const SimulationConfig& c, const ExcitationState& initial,
                    const std::vector<double>& t_grid, const EvolveOptions& opt = {});
EvolveResult evolve(const SimulationConfig& c, const ExcitationState& initial, const std::vector<double>& t_grid,
                    const EvolveOptions& opt = {});

// Population along the row y of a bath snapshot, x ascending from x_min.
std::vector<double> row_slice(const SimulationConfig& c, const std::vector<double>& snapshot, int y);

struct RefocusMetric {
    int peak_site = 0;           // x coordinate
    double peak_fraction = 0;
    double fwhm_sites = 0;
    double neighbour_decades = 0; // log10(peak / larger neighbour)
};

// Works on a bare slice; x0 is the coordinate of slice[0].
RefocusMetric refocusing_metric(const std::vector<double>& slice, int x0 = 0);
RefocusMetric refocusing_metric(const SimulationConfig& c, const std::vector<double>& snapshot, int slice_y);

struct EnsembleResult {
    std::vector<double> snapshot_times;
    std::vector<std::vector<double>> mean_log;   // [snapshot][site], log10 population
    std::vector<std::vector<double>> std_log;
    int realizations = 0;
};

// Log floor keeps empty sites finite.
constexpr double kLogFloor = 1e-300;

EnsembleResult disorder_ensemble(const SimulationConfig& c, const ExcitationState& initial, int n_realizations,
                                 const std::vector<double>& snapshot_times, int threads = 0,
                                 const EvolveOptions& opt = {});

struct MarkovFit {
    double rate = 0;      // population decay rate
    double r2 = 0;
    std::size_t points = 0;
};

// Least-squares slope of -log P(t) over [t0, t1].
MarkovFit markov_fit(const std::vector<double>& t, const std::vector<double>& pop, double t0, double t1);

}  // namespace bathwave
