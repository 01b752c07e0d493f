#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <json.hpp>
#include <string>
#include <vector>

#include "bathwave/bath_dynamics.hpp"
#include "bathwave/ghost.hpp"
#include "bathwave/greens.hpp"
#include "bathwave/semiclassics.hpp"

namespace bathwave {

// Column-major numeric table written as CSV with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    void add(std::vector<double> row) { rows.push_back(std::move(row)); }
    std::string to_csv() const;
};

// Population snapshot as a CSV matrix, one row per y (ascending), one column per x.
std::string snapshot_csv(const SimulationConfig& c, const std::vector<double>& pop);

struct Artifact {
    std::string name;      // file name relative to the output directory
    std::string content;
};

struct RecipeOutput {
    std::vector<Artifact> files;
    nlohmann::json summary = nlohmann::json::object();
};

enum class Scale { Smoke, Desk, Full };
Scale parse_scale(const std::string& s);
const char* to_string(Scale s);

struct RunContext {
    Scale scale = Scale::Desk;
    int threads = 0;
    std::uint64_t seed = 1;
    // overrides left at NaN keep the recipe's own parameters
    double g = std::numeric_limits<double>::quiet_NaN();
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double chi = std::numeric_limits<double>::quiet_NaN();
    std::function<void(const std::string&)> log;
};

const std::vector<std::string>& figure_ids();
RecipeOutput reproduce(const std::string& id, const RunContext& ctx);

// Writes the artifacts plus manifest.json {recipe, inputs, inputs_hash, version, timings, files}.
void write_outputs(const std::string& dir, const std::string& recipe, const nlohmann::json& inputs,
                   const RecipeOutput& out, double seconds);
std::uint64_t fnv1a(const std::string& s);
const char* version();

// ---- building blocks shared with the acceptance checks ----

struct ApproximantRow {
    double n = 0;
    cplx exact{0, 0};      // full G = Omega - i Gamma / 2
    double omega = 0;
    double omega_tube = 0;
    double omega_stat = 0;
    double err_tube = 0;   // |Omega - Omega_i| / |Omega|
    double err_stat = 0;
};

// Tube and stationary-phase approximants against the exact Omega along rho = n * step.
std::vector<ApproximantRow> approximant_scan(const LatticeSpec& spec, int band, double delta, const Vec2& step,
                                             const std::vector<int>& ns, const OmegaOptions& opt = {});

// Separation angle of the caustic in the open quadrant of dir (first quadrant by default).
double caustic_angle(const ResonantSet& set, const Vec2& quadrant = Vec2(1, 1));

struct PowerDecay {
    std::vector<double> n;
    std::vector<double> envelope;   // |Gamma_c| of the curve carrying the caustic
    LinearFit fit;
};
// Envelope of one resonant curve's Gamma along rho = n * step and its log-log fit.
PowerDecay caustic_decay(const ResonantSet& set, std::size_t curve, const Vec2& step, const std::vector<double>& ns);

// Magnetic runs on square(jx, jy) at Delta: orbit period and spatial period for alpha.
struct OrbitScales {
    double tau = 0;
    double l = 0;
    int l_sites = 0;
};
OrbitScales orbit_scales(double jx, double jy, double delta, double alpha);

// Odd lattice height keeping a front launched at |y| <= y_extent clear of the edge until t_over_tau.
int clear_height(const OrbitScales& s, double t_over_tau, int y_extent, int minimum = 401);

}  // namespace bathwave
