#include "bathwave/recipes.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

namespace bathwave {

using json = nlohmann::json;
namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

const char* version() { return "0.4.0"; }

std::string Table::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
    os << '\n';
    for (const auto& r : rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
        os << '\n';
    }
    return os.str();
}

std::string snapshot_csv(const SimulationConfig& c, const std::vector<double>& pop) {
    std::ostringstream os;
    os.precision(10);
    for (int y = 0; y < c.ny; ++y) {
        for (int x = 0; x < c.nx; ++x) os << (x ? "," : "") << pop[static_cast<std::size_t>(y) * c.nx + x];
        os << '\n';
    }
    return os.str();
}

Scale parse_scale(const std::string& s) {
    if (s == "smoke") return Scale::Smoke;
    if (s == "desk") return Scale::Desk;
    if (s == "full") return Scale::Full;
    throw Error(ErrorKind::Validation, "unknown scale '" + s + "' (smoke, desk, full)");
}

const char* to_string(Scale s) {
    switch (s) {
        case Scale::Smoke: return "smoke";
        case Scale::Desk: return "desk";
        case Scale::Full: return "full";
    }
    return "desk";
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_outputs(const std::string& dir, const std::string& recipe, const json& inputs, const RecipeOutput& out,
                   double seconds) {
    fs::create_directories(dir);
    json files = json::array();
    for (const auto& a : out.files) {
        std::ofstream f(fs::path(dir) / a.name, std::ios::binary);
        if (!f) throw Error(ErrorKind::Validation, "cannot write " + (fs::path(dir) / a.name).string());
        f << a.content;
        std::ostringstream h;
        h << std::hex << fnv1a(a.content);
        files.push_back({{"name", a.name}, {"bytes", a.content.size()}, {"hash", h.str()}});
    }
    std::ostringstream ih;
    ih << std::hex << fnv1a(inputs.dump());
    json m;
    m["recipe"] = recipe;
    m["inputs"] = inputs;
    m["inputs_hash"] = ih.str();
    m["version"] = version();
    m["timings"] = {{"wall_seconds", seconds}};
    m["files"] = files;
    m["summary"] = out.summary;
    std::ofstream f(fs::path(dir) / "manifest.json");
    f << m.dump(2) << '\n';
}

// ---- shared building blocks ----

std::vector<ApproximantRow> approximant_scan(const LatticeSpec& spec, int band, double delta, const Vec2& step,
                                             const std::vector<int>& ns, const OmegaOptions& opt) {
    std::vector<Separation> seps;
    for (int n : ns) seps.push_back({n * step, 0, 0});
    const auto ex = omega_exact(spec, delta, seps, opt);
    const auto set = extract(spec, band, delta);
    const double eps = 0.85 / 0.9 * max_tube_width(set);
    std::vector<ApproximantRow> rows;
    for (std::size_t q = 0; q < seps.size(); ++q) {
        ApproximantRow r;
        r.n = ns[q];
        const auto fine = refine_for(set, seps[q].rho.norm());
        r.exact = ex[q].value - 0.5 * cplx(0, 1) * gamma(fine, seps[q]);
        r.omega = ex[q].value.real();
        r.omega_tube = tube_approximant(fine, seps[q], eps).real();
        r.omega_stat = stationary_phase(fine, seps[q]).real();
        r.err_tube = std::abs(r.omega - r.omega_tube) / std::abs(r.omega);
        r.err_stat = std::abs(r.omega - r.omega_stat) / std::abs(r.omega);
        rows.push_back(r);
    }
    return rows;
}

double caustic_angle(const ResonantSet& set, const Vec2& quadrant) {
    for (const auto& c : caustics(set))
        if (c.direction.x() * quadrant.x() > 0 && c.direction.y() * quadrant.y() > 0)
            return std::atan2(c.direction.y(), c.direction.x());
    throw Error(ErrorKind::NoResonantDirection, "no caustic in the requested quadrant");
}

PowerDecay caustic_decay(const ResonantSet& set, std::size_t curve, const Vec2& step, const std::vector<double>& ns) {
    if (curve >= set.curves.size()) throw Error(ErrorKind::Validation, "curve index out of range");
    PowerDecay d;
    for (double n : ns) {
        const long m = std::lround(n);
        const Separation r{static_cast<double>(m) * step, 0, 0};
        const auto fine = refine_for(set, r.rho.norm());
        d.n.push_back(static_cast<double>(m));
        d.envelope.push_back(std::abs(gamma_by_curve(fine, r)[curve]));
    }
    d.fit = power_fit(d.n, d.envelope);
    return d;
}

OrbitScales orbit_scales(double jx, double jy, double delta, double alpha) {
    const auto set = extract(build_square(jx, jy), 0, delta);
    const auto p = orbit_periods(set, alpha);
    OrbitScales s;
    s.tau = p[0].tau;
    s.l = p[0].l.norm();
    s.l_sites = static_cast<int>(std::lround(s.l));
    return s;
}

int clear_height(const OrbitScales& s, double t_over_tau, int y_extent, int minimum) {
    // fronts move by l per tau; 50 sites of margin absorb the leading tail
    const int half = static_cast<int>(std::ceil(t_over_tau * s.l)) + y_extent + 50;
    return std::max(minimum, 2 * half + 1);
}

namespace {

double pick(double override_value, double fallback) { return std::isnan(override_value) ? fallback : override_value; }

void say(const RunContext& ctx, const std::string& m) {
    if (ctx.log) ctx.log(m);
}

std::vector<int> int_range(int a, int b, int step = 1) {
    std::vector<int> v;
    for (int n = a; n <= b; n += step) v.push_back(n);
    return v;
}

std::vector<double> log_space(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a * std::pow(b / a, n > 1 ? double(i) / (n - 1) : 0.0));
    return v;
}

Table approximant_table(const std::vector<ApproximantRow>& rows) {
    Table t{{"n", "Omega_exact", "Omega_tube", "Omega_stat", "err_tube", "err_stat"}, {}};
    for (const auto& r : rows) t.add({r.n, r.omega, r.omega_tube, r.omega_stat, r.err_tube, r.err_stat});
    return t;
}

// Shared parameters of the magnetic-field figures. Desk and smoke shrink the flux
// so that l fits the lattice; full follows the published geometry.
struct Magnetic {
    double jx = 1, jy = 2, delta = -1;
    double alpha = 0.02;
    int nx = 61;
    int min_ny = 401;
    OrbitScales s;
};

Magnetic magnetic(const RunContext& ctx) {
    Magnetic m;
    if (ctx.scale == Scale::Smoke) {
        m.alpha = 0.05;
        m.nx = 31;
        m.min_ny = 101;
    } else if (ctx.scale == Scale::Full) {
        m.alpha = 0.01;
        m.nx = 111;
        m.min_ny = 1201;
    }
    m.alpha = pick(ctx.alpha, m.alpha);
    m.s = orbit_scales(m.jx, m.jy, m.delta, m.alpha);
    return m;
}

SimulationConfig magnetic_config(const Magnetic& m, double t_over_tau, int y_extent) {
    SimulationConfig c;
    c.nx = m.nx;
    c.ny = clear_height(m.s, t_over_tau, y_extent, m.min_ny);
    c.jx = m.jx;
    c.jy = m.jy;
    c.alpha = m.alpha;
    return c;
}

json run_summary(const SimulationConfig& c, const EvolveResult& r, const Magnetic& m) {
    return {{"nx", c.nx},       {"ny", c.ny},           {"alpha", c.alpha},
            {"tau", m.s.tau},   {"l", m.s.l},           {"edge_population", r.edge_pop},
            {"norm_drift", r.norm_drift}, {"krylov_steps", r.steps}, {"matvecs", r.matvecs}};
}

RecipeOutput fig1b(const RunContext& ctx) {
    const auto ns = ctx.scale == Scale::Smoke ? int_range(5, 12) : int_range(5, 40);
    say(ctx, "exact and approximate Omega along the square diagonal");
    const auto rows = approximant_scan(build_square(1, 1), 0, -1, Vec2(1, 1), ns);
    RecipeOutput out;
    out.files.push_back({"fig1b.csv", approximant_table(rows).to_csv()});
    std::vector<double> n, es;
    for (const auto& r : rows) {
        n.push_back(r.n);
        es.push_back(r.err_stat);
    }
    const auto f = power_fit(n, es);
    out.summary = {{"stat_error_exponent", f.slope}, {"stat_error_r2", f.r2}, {"tube_error_last", rows.back().err_tube}};
    return out;
}

RecipeOutput fig2b(const RunContext& ctx) {
    const auto set = extract(build_square(1, 2), 0, -1);
    const int m = ctx.scale == Scale::Smoke ? 90 : 720;
    Table t{{"theta", "sigma", "points", "caustic"}, {}};
    for (int i = 0; i < m; ++i) {
        const double th = 2 * kPi * i / m - kPi;
        const auto cs = directional_cross_section(set, Vec2(std::cos(th), std::sin(th)));
        t.add({th, cs.sigma, static_cast<double>(cs.points.size()), cs.diverges_at_caustic ? 1.0 : 0.0});
    }
    RecipeOutput out;
    out.files.push_back({"fig2b.csv", t.to_csv()});
    out.files.push_back({"fig2b_levelset.csv", to_csv(set)});
    out.summary = {{"theta_c", caustic_angle(set)}};
    return out;
}

RecipeOutput fig2c(const RunContext& ctx) {
    const auto spec = build_square(1, 2);
    const auto set = extract(spec, 0, -1);
    const int R = ctx.scale == Scale::Smoke ? 3 : ctx.scale == Scale::Desk ? 12 : 24;
    say(ctx, "Green's function map");
    // first quadrant; the rest follows from inversion and mirror symmetry
    std::vector<Separation> seps;
    for (int y = 0; y <= R; ++y)
        for (int x = 0; x <= R; ++x) seps.push_back({Vec2(x, y), 0, 0});
    const auto ex = omega_exact(spec, -1, seps);
    Table map{{"x", "y", "theta", "Omega", "Gamma", "abs_G", "log10_abs_G", "phase"}, {}};
    const auto fine = refine_for(set, std::sqrt(2.0) * R);
    for (std::size_t q = 0; q < seps.size(); ++q) {
        const double om = ex[q].value.real(), ga = gamma(fine, seps[q]).real();
        const cplx G(om, -0.5 * ga);
        const Vec2 r = seps[q].rho;
        map.add({r.x(), r.y(), std::atan2(r.y(), r.x()), om, ga, std::abs(G), std::log10(std::abs(G)), std::arg(G)});
    }

    say(ctx, "incoherent-dominated direction");
    // Omega cancels along x to the floor of the quadrature; pin it tightly
    OmegaOptions o;
    o.abs_tol = 1e-18;
    o.rel_tol = 1e-12;
    o.max_grid = 16384;
    o.min_level = o.max_level = 5;
    o.phase_step = 0.05;
    const auto ns = ctx.scale == Scale::Smoke ? int_range(1, 5) : int_range(1, 30);
    std::vector<Separation> line;
    for (int n : ns) line.push_back({Vec2(n, 0), 0, 0});
    const auto lx = omega_exact(spec, -1, line, o);
    Table inset{{"n", "Omega", "Gamma", "abs_ratio"}, {}};
    double worst = 0;
    const auto fine_x = refine_for(set, ns.back());
    for (std::size_t q = 0; q < line.size(); ++q) {
        const double ga = gamma(fine_x, line[q]).real();
        const double ratio = std::abs(lx[q].value) / std::abs(ga);
        if (ns[q] >= 10) worst = std::max(worst, ratio);
        inset.add({static_cast<double>(ns[q]), lx[q].value.real(), ga, ratio});
    }
    RecipeOutput out;
    out.files.push_back({"fig2c_map.csv", map.to_csv()});
    out.files.push_back({"fig2c_inset.csv", inset.to_csv()});
    out.summary = {{"max_abs_omega_over_gamma_n_ge_10", worst}};
    return out;
}

RecipeOutput fig2d(const RunContext& ctx) {
    const auto set = extract(build_square(1, 2), 0, -1);
    const double tc = caustic_angle(set);
    const std::vector<double> d = ctx.scale == Scale::Smoke ? std::vector<double>{0.1, 0.2}
                                                            : std::vector<double>{0.02, 0.03, 0.05, 0.08, 0.12, 0.2};
    std::vector<double> thetas;
    for (double x : d) thetas.push_back(tc - x);
    say(ctx, "ghost decay scan");
    const auto g = ghost_scan(set, tc, thetas);
    Table t{{"theta", "dtheta", "kappa_exact", "kappa_fit", "r2"}, {}};
    for (std::size_t i = 0; i < g.fits.size(); ++i)
        t.add({g.fits[i].direction.theta, g.dtheta[i], g.fits[i].kappa, g.kappa_model(g.dtheta[i]), g.fits[i].r2});
    RecipeOutput out;
    out.files.push_back({"fig2d.csv", t.to_csv()});
    out.summary = {{"kappa", g.prefactor}, {"p", g.exponent}, {"r2", g.r2}, {"theta_c", tc}};
    out.files.push_back({"fig2d_fit.json", out.summary.dump(2)});
    return out;
}

RecipeOutput magnetic_snapshot(const RunContext& ctx, const std::string& id, double t_over_tau, double g_default) {
    const auto m = magnetic(ctx);
    auto c = magnetic_config(m, t_over_tau, 0);
    c.emitters = {{0, 0, m.delta, pick(ctx.g, g_default)}};
    EvolveOptions o;
    o.snapshot_times = {t_over_tau * m.s.tau};
    std::vector<double> ts;
    for (int i = 0; i <= 100; ++i) ts.push_back(i * t_over_tau * m.s.tau / 100);
    say(ctx, "bath evolution on " + std::to_string(c.nx) + "x" + std::to_string(c.ny));
    const auto r = evolve(c, excited_emitter(c, 0), ts, o);
    RecipeOutput out;
    out.files.push_back({id + "_population.csv", snapshot_csv(c, r.snapshots[0])});
    Table e{{"t", "t_over_tau", "emitter_population"}, {}};
    for (std::size_t i = 0; i < ts.size(); ++i) e.add({ts[i], ts[i] / m.s.tau, r.emitter_pop[i][0]});
    out.files.push_back({id + "_emitter.csv", e.to_csv()});
    out.files.push_back({id + "_config.json", to_json(c)});
    out.summary = run_summary(c, r, m);
    if (id == "fig3b") {
        // trajectories from the origin with k sampled along each open sheet
        const auto set = extract(build_square(m.jx, m.jy), 0, m.delta);
        Table tr{{"id", "t", "x", "y", "kx", "ky"}, {}};
        int id_ = 0;
        OrbitOptions oo;
        oo.sample_dt = m.s.tau / 200;
        for (const auto& cv : set.curves)
            for (std::size_t j = 0; j < cv.points.size(); j += std::max<std::size_t>(1, cv.points.size() / 12)) {
                const auto t = integrate_orbit(set.spec, 0, cv.points[j].k, Vec2::Zero(), m.alpha, m.s.tau, oo);
                for (const auto& s : t.samples) tr.add({double(id_), s.t, s.r.x(), s.r.y(), s.k.x(), s.k.y()});
                ++id_;
            }
        out.files.push_back({"fig3b_trajectories.csv", tr.to_csv()});
    }
    return out;
}

RecipeOutput fig3c(const RunContext& ctx) {
    const auto m = magnetic(ctx);
    auto c = magnetic_config(m, 1, 0);
    c.emitters = {{0, 0, m.delta, pick(ctx.g, 0.1)}};
    EvolveOptions o;
    o.snapshot_times = {m.s.tau};
    const auto r = evolve(c, excited_emitter(c, 0), {}, o);
    const auto s0 = row_slice(c, r.snapshots[0], 0), sl = row_slice(c, r.snapshots[0], m.s.l_sites);
    Table t{{"x", "pop_y0", "pop_yl"}, {}};
    for (int i = 0; i < c.nx; ++i) t.add({double(c.x_min() + i), s0[i], sl[i]});
    const auto m0 = refocusing_metric(s0, c.x_min()), ml = refocusing_metric(sl, c.x_min());
    RecipeOutput out;
    out.files.push_back({"fig3c.csv", t.to_csv()});
    out.summary = run_summary(c, r, m);
    out.summary["y0"] = {{"peak_site", m0.peak_site}, {"peak_fraction", m0.peak_fraction}, {"fwhm", m0.fwhm_sites}};
    out.summary["yl"] = {{"peak_site", ml.peak_site},
                         {"peak_fraction", ml.peak_fraction},
                         {"fwhm", ml.fwhm_sites},
                         {"neighbour_decades", ml.neighbour_decades}};
    return out;
}

// Emitters separated by 3l along y, centred on the lattice.
std::vector<Emitter> emitter_chain(int n, int spacing, double delta, double g) {
    std::vector<Emitter> e;
    for (int i = 0; i < n; ++i) e.push_back({0, i * spacing - (n - 1) * spacing / 2, delta, g});
    return e;
}

RecipeOutput fig3d(const RunContext& ctx) {
    const auto m = magnetic(ctx);
    // g = 0.3 lets a lone emitter decay within ten orbit periods at the desk flux
    const double g = pick(ctx.g, ctx.scale == Scale::Full ? 0.025 : 0.3);
    const double t_end = ctx.scale == Scale::Smoke ? 4.0 : 10.0;
    const int spacing = 3 * m.s.l_sites;
    std::vector<double> ts;
    for (int i = 0; i <= 200; ++i) ts.push_back(i * t_end * m.s.tau / 200);
    Table t{{"t", "t_over_tau", "P1", "P2", "P3"}, {}};
    std::vector<std::vector<double>> pops(3);
    json runs = json::array();
    for (int n = 1; n <= 3; ++n) {
        auto c = magnetic_config(m, t_end, spacing * (n - 1) / 2 + 1);
        c.emitters = emitter_chain(n, spacing, m.delta, g);
        say(ctx, std::to_string(n) + " emitter(s) on " + std::to_string(c.nx) + "x" + std::to_string(c.ny));
        const auto init = n == 1 ? excited_emitter(c, 0) : dark_state(c, n);
        const auto r = evolve(c, init, ts);
        for (const auto& p : r.emitter_pop) {
            double s = 0;
            for (double x : p) s += x;
            pops[n - 1].push_back(s);
        }
        runs.push_back(run_summary(c, r, m));
    }
    for (std::size_t i = 0; i < ts.size(); ++i) t.add({ts[i], ts[i] / m.s.tau, pops[0][i], pops[1][i], pops[2][i]});
    RecipeOutput out;
    out.files.push_back({"fig3d.csv", t.to_csv()});
    out.summary = {{"g", g}, {"runs", runs}, {"final_ratio_2_over_1", pops[1].back() / pops[0].back()},
                   {"final_ratio_3_over_1", pops[2].back() / pops[0].back()}};
    return out;
}

RecipeOutput fig3e(const RunContext& ctx) {
    const auto m = magnetic(ctx);
    const double g = pick(ctx.g, ctx.scale == Scale::Full ? 0.025 : 0.3);
    const double t_end = ctx.scale == Scale::Smoke ? 4.0 : 10.0;
    const int spacing = 3 * m.s.l_sites;
    auto c = magnetic_config(m, t_end, spacing / 2 + 1);
    c.emitters = emitter_chain(2, spacing, m.delta, g);
    EvolveOptions o;
    o.snapshot_times = {t_end * m.s.tau};
    const auto r = evolve(c, dark_state(c, 2), {t_end * m.s.tau}, o);
    RecipeOutput out;
    out.files.push_back({"fig3e_population.csv", snapshot_csv(c, r.snapshots[0])});
    out.files.push_back({"fig3e_config.json", to_json(c)});
    out.summary = run_summary(c, r, m);
    out.summary["emitter_population"] = r.emitter_pop[0][0] + r.emitter_pop[0][1];
    return out;
}

RecipeOutput fig4a(const RunContext& ctx) {
    const auto m = magnetic(ctx);
    auto c = magnetic_config(m, 3, 0);
    c.emitters = {{0, 0, m.delta, pick(ctx.g, 0.025)}};
    const int yo = m.s.l_sites / 2;
    for (int x = -10; x <= 10; ++x)
        if (c.contains(x, yo)) c.obstructions.push_back({x, yo});
    EvolveOptions o;
    o.snapshot_times = {3 * m.s.tau};
    const auto r = evolve(c, excited_emitter(c, 0), {}, o);
    double inside = 0, total = 0;
    for (int i = 0; i < c.sites(); ++i) {
        total += r.snapshots[0][i];
        if (std::abs(c.site_coords(i)[0]) <= 15) inside += r.snapshots[0][i];
    }
    RecipeOutput out;
    out.files.push_back({"fig4a_population.csv", snapshot_csv(c, r.snapshots[0])});
    out.files.push_back({"fig4a_config.json", to_json(c)});
    out.summary = run_summary(c, r, m);
    out.summary["fraction_within_15"] = inside / total;
    return out;
}

struct EnsembleSetup {
    Magnetic m;
    SimulationConfig c;
    int realizations = 100;
};

EnsembleSetup ensemble_setup(const RunContext& ctx, double chi) {
    EnsembleSetup e{magnetic(ctx), {}, 100};
    e.c = magnetic_config(e.m, 3, 0);
    e.c.emitters = {{0, 0, e.m.delta, pick(ctx.g, 0.025)}};
    e.c.chi = chi;
    e.c.seed = ctx.seed;
    if (ctx.scale == Scale::Smoke) e.realizations = 4;
    if (ctx.scale == Scale::Full) e.realizations = 500;
    return e;
}

Table ensemble_table(const SimulationConfig& c, const EnsembleResult& r) {
    Table t{{"site", "x", "y", "mean_log_pop", "std_log_pop"}, {}};
    for (int i = 0; i < c.sites(); ++i) {
        const auto [x, y] = c.site_coords(i);
        t.add({double(i), double(x), double(y), r.mean_log[0][i], r.std_log[0][i]});
    }
    return t;
}

RecipeOutput fig4b(const RunContext& ctx) {
    auto e = ensemble_setup(ctx, pick(ctx.chi, 0.5));
    say(ctx, std::to_string(e.realizations) + " disorder realizations");
    const auto r = disorder_ensemble(e.c, excited_emitter(e.c, 0), e.realizations, {3 * e.m.s.tau}, ctx.threads);
    RecipeOutput out;
    out.files.push_back({"fig4b_ensemble.csv", ensemble_table(e.c, r).to_csv()});
    out.files.push_back({"fig4b_mean_log_population.csv", snapshot_csv(e.c, r.mean_log[0])});
    out.files.push_back({"fig4b_config.json", to_json(e.c)});
    out.summary = {{"chi", e.c.chi}, {"realizations", e.realizations}, {"seed", e.c.seed}};
    return out;
}

RecipeOutput fig4cf(const RunContext& ctx) {
    const std::vector<double> chis = std::isnan(ctx.chi) ? std::vector<double>{0.0, 0.1, 0.25, 0.5}
                                                         : std::vector<double>{0.0, ctx.chi};
    Table t{{"chi", "x", "mean_log_pop", "std_log_pop"}, {}};
    json per = json::array();
    for (double chi : chis) {
        auto e = ensemble_setup(ctx, chi);
        const int n = chi == 0 ? 1 : e.realizations;
        say(ctx, "chi = " + std::to_string(chi) + ", " + std::to_string(n) + " realizations");
        const auto r = disorder_ensemble(e.c, excited_emitter(e.c, 0), n, {3 * e.m.s.tau}, ctx.threads);
        const int y = 2 * e.m.s.l_sites;
        const auto mean = row_slice(e.c, r.mean_log[0], y), sd = row_slice(e.c, r.std_log[0], y);
        for (int i = 0; i < e.c.nx; ++i) t.add({chi, double(e.c.x_min() + i), mean[i], sd[i]});
        std::vector<double> sorted(mean);
        std::sort(sorted.begin(), sorted.end());
        per.push_back({{"chi", chi},
                       {"realizations", n},
                       {"central_mean_log_pop", mean[-e.c.x_min()]},
                       {"central_std_log_pop", sd[-e.c.x_min()]},
                       {"median_log_pop", sorted[sorted.size() / 2]}});
    }
    RecipeOutput out;
    out.files.push_back({"fig4cf.csv", t.to_csv()});
    out.summary = {{"slices", per}};
    return out;
}

RecipeOutput appD(const RunContext& ctx) {
    RecipeOutput out;
    const bool smoke = ctx.scale == Scale::Smoke;
    say(ctx, "honeycomb approximants at Delta = 2");
    const auto hc = build_honeycomb(1, 0);
    const auto rows = approximant_scan(hc, 1, 2.0, hc.a[0], smoke ? int_range(5, 10) : int_range(5, 40));
    out.files.push_back({"appD_error.csv", approximant_table(rows).to_csv()});

    say(ctx, "caustic decay with next-nearest hopping 0.25");
    const auto spec = build_honeycomb(1, 0.25);
    const auto set = extract(spec, 0, -1.5);
    // the higher-order caustic: K has a double zero there
    const Caustic* ho = nullptr;
    const auto cs = caustics(set);
    for (const auto& c : cs)
        if (c.order == 2 && (!ho || c.direction.y() > ho->direction.y())) ho = &c;
    if (!ho) throw Error(ErrorKind::NoResonantDirection, "no higher-order caustic found");
    const auto dir = lattice_direction(spec, std::atan2(ho->direction.y(), ho->direction.x()), 1e-9, 4);
    const auto d = caustic_decay(set, ho->curve, dir.vector, smoke ? log_space(20, 160, 4) : log_space(40, 2560, 16));
    Table t{{"n", "rho", "abs_gamma_curve"}, {}};
    for (std::size_t i = 0; i < d.n.size(); ++i) t.add({d.n[i], d.n[i] * dir.vector.norm(), d.envelope[i]});
    out.files.push_back({"appD_caustic.csv", t.to_csv()});
    out.summary = {{"caustic_theta", dir.theta},
                   {"caustic_cell", dir.cell},
                   {"decay_exponent", d.fit.slope},
                   {"decay_r2", d.fit.r2},
                   {"tube_error_last", rows.back().err_tube}};
    return out;
}

}  // namespace

const std::vector<std::string>& figure_ids() {
    static const std::vector<std::string> ids{"fig1b", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c",
                                              "fig3d", "fig3e", "fig4a", "fig4b", "fig4cf", "appD"};
    return ids;
}

RecipeOutput reproduce(const std::string& id, const RunContext& ctx) {
    if (id == "fig1b") return fig1b(ctx);
    if (id == "fig2b") return fig2b(ctx);
    if (id == "fig2c") return fig2c(ctx);
    if (id == "fig2d") return fig2d(ctx);
    if (id == "fig3a") return magnetic_snapshot(ctx, "fig3a", ctx.scale == Scale::Smoke ? 2 : 6, 0.1);
    if (id == "fig3b") return magnetic_snapshot(ctx, "fig3b", 1, 0.1);
    if (id == "fig3c") return fig3c(ctx);
    if (id == "fig3d") return fig3d(ctx);
    if (id == "fig3e") return fig3e(ctx);
    if (id == "fig4a") return fig4a(ctx);
    if (id == "fig4b") return fig4b(ctx);
    if (id == "fig4cf") return fig4cf(ctx);
    if (id == "appD") return appD(ctx);
    throw Error(ErrorKind::Validation, "unknown figure id '" + id + "'");
}

}  // namespace bathwave
