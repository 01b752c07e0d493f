#include "bathwave/semiclassics.hpp"

#include <Eigen/LU>
#include <array>
#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>
#include <cmath>

namespace bathwave {

namespace odeint = boost::numeric::odeint;

double field_strength(const LatticeSpec& spec, double alpha) { return 2 * M_PI * alpha / spec.cell_area(); }

const char* to_string(OrbitKind k) {
    switch (k) {
        case OrbitKind::Closed: return "closed";
        case OrbitKind::Open: return "open";
        case OrbitKind::Undetermined: return "undetermined";
    }
    return "undetermined";
}

namespace {

using State = std::array<double, 4>;  // x, y, kx, ky

struct Rhs {
    const LatticeSpec& spec;
    int band;
    double b;
    void operator()(const State& s, State& ds, double) const {
        const Vec2 v = derivatives(spec, Vec2(s[2], s[3]), band).v;
        ds[0] = v.x();
        ds[1] = v.y();
        // k' = -v x B = B (-v_y, v_x)
        ds[2] = -b * v.y();
        ds[3] = b * v.x();
    }
};

Vec2 kpart(const State& s) { return {s[2], s[3]}; }

}  // namespace

OrbitTrace integrate_orbit(const LatticeSpec& spec, int band, const Vec2& k0, const Vec2& r0, double alpha,
                           double t_max, const OrbitOptions& opt) {
    spec.validate();
    // the sign of alpha sets the field direction
    if (!(alpha != 0) || !std::isfinite(alpha)) throw Error(ErrorKind::Validation, "flux must be nonzero");
    if (!(t_max > 0)) throw Error(ErrorKind::Validation, "t_max must be positive");
    if (band < 0 || band >= spec.bands()) throw Error(ErrorKind::Validation, "band index out of range");
    const double b = field_strength(spec, alpha);
    Rhs rhs{spec, band, b};
    OrbitTrace tr;
    tr.energy = band_energy(spec, k0, band);
    const double dt_out = opt.sample_dt > 0 ? opt.sample_dt : t_max / 2000;

    // Poincare section through k0, transverse to the motion
    const Vec2 v0 = derivatives(spec, k0, band).v;
    const Vec2 dir = std::copysign(1.0, b) * Vec2(-v0.y(), v0.x()).normalized();
    const auto rec = spec.reciprocal();
    Eigen::Matrix2d B;
    B.col(0) = rec[0];
    B.col(1) = rec[1];
    const Eigen::Matrix2d Binv = B.inverse();
    const double kscale = std::min(rec[0].norm(), rec[1].norm());

    auto stepper = odeint::make_dense_output(opt.abs_tol, opt.rel_tol, odeint::runge_kutta_dopri5<State>());
    State s{r0.x(), r0.y(), k0.x(), k0.y()};
    stepper.initialize(s, 0.0, std::min(1e-2, dt_out));
    double next_out = 0;
    State tmp;
    auto record = [&](double t, const State& st) {
        tr.samples.push_back({t, Vec2(st[0], st[1]), kpart(st)});
        const double d = std::abs(band_energy(spec, kpart(st), band) - tr.energy);
        tr.max_energy_drift = std::max(tr.max_energy_drift, d);
    };
    // section function for the lattice image k0 + G nearest to the current k
    auto section = [&](const State& st, Vec2& G) {
        const Vec2 dk = kpart(st) - k0;
        const Vec2 n = Binv * dk;
        G = B * Vec2(std::round(n.x()), std::round(n.y()));
        return (dk - G).dot(dir);
    };
    while (stepper.current_time() < t_max) {
        const double t0 = stepper.current_time();
        State s0 = stepper.current_state();
        stepper.do_step(rhs);
        const double t1 = std::min(stepper.current_time(), t_max);
        while (next_out <= t1 + 1e-12 * t_max) {
            stepper.calc_state(next_out, tmp);
            record(next_out, tmp);
            next_out += dt_out;
        }
        if (tr.max_energy_drift > opt.max_drift * spec.energy_unit)
            throw Error(ErrorKind::EnergyDrift, "energy drift along the orbit exceeds tolerance");
        if (tr.kind == OrbitKind::Undetermined && t0 > 0) {
            Vec2 G0, G1;
            const double g0 = section(s0, G0);
            const double g1 = section(stepper.current_state(), G1);
            const bool near = (kpart(stepper.current_state()) - k0 - G1).norm() < 0.25 * kscale;
            if (g0 < 0 && g1 >= 0 && near && (G0 - G1).norm() < 1e-9) {
                auto f = [&](double t) {
                    State st;
                    stepper.calc_state(t, st);
                    Vec2 G;
                    return section(st, G);
                };
                boost::uintmax_t it = 100;
                const auto root = boost::math::tools::toms748_solve(f, t0, stepper.current_time(), g0, g1,
                                                                    boost::math::tools::eps_tolerance<double>(50), it);
                const double tp = 0.5 * (root.first + root.second);
                State st;
                stepper.calc_state(tp, st);
                tr.period = tp;
                tr.shift_k = G1;
                tr.kind = G1.norm() < 1e-9 ? OrbitKind::Closed : OrbitKind::Open;
                tr.drift = Vec2(st[0], st[1]) - r0;
                if (opt.stop_at_period) {
                    record(tp, st);
                    break;
                }
            }
        }
    }
    return tr;
}

std::vector<OrbitPeriod> orbit_periods(const ResonantSet& set, double alpha) {
    if (!(alpha > 0)) throw Error(ErrorKind::Validation, "flux must be positive");
    const double b = field_strength(set.spec, alpha);
    std::vector<OrbitPeriod> out;
    for (std::size_t ci = 0; ci < set.curves.size(); ++ci) {
        const auto& c = set.curves[ci];
        if (c.closed) continue;
        OrbitPeriod p;
        p.curve = ci;
        Vec2 sum_v = Vec2::Zero();
        double sum_t = 0;
        for (const auto& pt : c.points) {
            sum_v += pt.normal();
            sum_t += 1.0 / pt.speed;
        }
        p.l = sum_v * c.step / b;
        p.tau = sum_t * c.step / b;
        // r - r0 = -z x (k - k0) / B along the orbit; extent across l
        const Vec2 lhat = p.l.normalized();
        double lo = 1e300, hi = -1e300;
        for (const auto& pt : c.points) {
            const Vec2 dk = pt.k - c.points[0].k;
            const Vec2 r = Vec2(dk.y(), -dk.x()) / b;
            const double x = r.x() * -lhat.y() + r.y() * lhat.x();
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        p.transverse_extent = hi - lo;
        out.push_back(p);
    }
    if (out.empty()) throw Error(ErrorKind::ClosedOrbit, "resonant set has no open component");
    return out;
}

}  // namespace bathwave
