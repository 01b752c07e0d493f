#pragma once

#include <Eigen/Core>
#include <array>
#include <string>
#include <vector>

#include "bathwave/lattice_model.hpp"

namespace bathwave {

// Local geometry of S at one point. The tangent is t = (v_y, -v_x) / |v|,
// the direction of traversal; curvature K = -t.H.t / |v| is the turning rate
// of v/|v| along it, and t.H.t is the inverse transverse mass.
struct CurvePoint {
    Vec2 k = Vec2::Zero();
    Vec2 v = Vec2::Zero();
    double speed = 0;
    double curvature = 0;
    double inverse_mass = 0;
    double s = 0;
    Vec2 tangent() const { return Vec2(v.y(), -v.x()) / speed; }
    Vec2 normal() const { return v / speed; }
    double transverse_mass() const { return 1.0 / inverse_mass; }
};

// One connected component, sampled at uniform arclength so that the
// periodic trapezoid rule is spectrally accurate for smooth integrands.
struct ResonantCurve {
    std::vector<CurvePoint> points;
    double length = 0;
    double step = 0;
    bool closed = true;
    std::array<int, 2> shift{0, 0};  // reciprocal-lattice winding of an open curve
    Vec2 shift_k = Vec2::Zero();
    int orientation = 1;             // +1 when v points out of a closed curve
};

struct ResonantSet {
    LatticeSpec spec;
    int band = 0;
    double delta = 0;
    std::vector<ResonantCurve> curves;

    bool empty() const { return curves.empty(); }
    std::size_t total_points() const;
    double total_length() const;
};

struct ExtractOptions {
    int grid_n = 512;
    int min_points = 512;     // per curve
    double max_step = 0.02;   // arclength step in units of 1/a
};

ResonantSet extract(const LatticeSpec& spec, int band, double delta, const ExtractOptions& opt = {});
// Re-trace with a finer step so that e^{i k.rho} is resolved up to |rho| = rho_max.
ResonantSet refine_for(const ResonantSet& set, double rho_max);
// Follow every component to a nearby energy; valid while no Van Hove energy is crossed.
ResonantSet continue_to(const ResonantSet& set, double delta, double max_step);

CurvePoint geometry_at(const LatticeSpec& spec, int band, const Vec2& k);
// Point at arclength s along a curve (s taken modulo the period, open curves shift by G).
CurvePoint point_at(const ResonantSet& set, std::size_t curve, double s);

struct WindingResult {
    double value = 0;
    double residual = 0;   // distance to the nearest integer
    long rounded = 0;
};
// Sum over curves of the turning number of the outward normal,
// (1/2pi) oint ds / (m_T v) with the outward orientation of each closed curve.
WindingResult winding(const ResonantSet& set);
WindingResult winding(const ResonantSet& set, std::size_t curve);

struct Caustic {
    Vec2 k = Vec2::Zero();
    Vec2 direction = Vec2::Zero();  // v/|v| at k
    int order = 1;                  // 1: sign change of K, 2: double zero
    std::size_t curve = 0;
    double s = 0;
    double curvature = 0;
};
std::vector<Caustic> caustics(const ResonantSet& set);

struct CrossSection {
    double sigma = 0;
    bool diverges_at_caustic = false;
    std::vector<CurvePoint> points;  // stationary points contributing
};
// Points of S whose group velocity is parallel (not antiparallel) to dir.
std::vector<CurvePoint> stationary_points(const ResonantSet& set, const Vec2& dir);
CrossSection directional_cross_section(const ResonantSet& set, const Vec2& dir);

std::string to_csv(const ResonantSet& set);

}  // namespace bathwave
