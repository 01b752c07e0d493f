#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bathwave/recipes.hpp"

using namespace bathwave;
using json = nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct ModelFlags {
    std::string model = "square";
    double jx = 1, jy = 2, t_nnn = 0;
    std::string lattice_file;
    int band = 0;
    double delta = -1;

    void add(CLI::App* app, bool with_delta = true) {
        app->add_option("--model", model, "square or honeycomb")->check(CLI::IsMember({"square", "honeycomb"}));
        app->add_option("--jx", jx, "hopping along x (honeycomb: nearest-neighbour hopping)");
        app->add_option("--jy", jy, "hopping along y (square only)");
        app->add_option("--t-nnn", t_nnn, "honeycomb next-nearest hopping along a1, a2");
        app->add_option("--lattice", lattice_file, "lattice JSON document instead of a built-in model");
        app->add_option("--band", band, "band index");
        if (with_delta) app->add_option("--delta", delta, "emitter frequency");
    }
    LatticeSpec spec() const {
        if (!lattice_file.empty()) {
            std::ifstream f(lattice_file);
            if (!f) throw Error(ErrorKind::Validation, "cannot read " + lattice_file);
            std::stringstream ss;
            ss << f.rdbuf();
            return lattice_from_json(ss.str());
        }
        if (model == "honeycomb") return build_honeycomb(jx, t_nnn);
        return build_square(jx, jy);
    }
    json inputs() const {
        return {{"model", model}, {"jx", jx}, {"jy", jy}, {"t_nnn", t_nnn}, {"lattice", lattice_file},
                {"band", band},   {"delta", delta}};
    }
};

struct OutputFlags {
    std::string out;
    std::string out_dir;
    void add(CLI::App* app) {
        app->add_option("--out", out, "write the main table to this file");
        app->add_option("--out-dir", out_dir, "write every artifact and a manifest here");
    }
};

// --out takes the first artifact, --out-dir takes all of them, otherwise it goes to stdout.
void emit(const OutputFlags& o, const std::string& recipe, const json& inputs, const RecipeOutput& r, double secs) {
    if (!o.out_dir.empty()) write_outputs(o.out_dir, recipe, inputs, r, secs);
    if (!o.out.empty() && !r.files.empty()) {
        std::ofstream f(o.out, std::ios::binary);
        if (!f) throw Error(ErrorKind::Validation, "cannot write " + o.out);
        f << r.files.front().content;
    }
    if (o.out.empty() && o.out_dir.empty()) {
        if (!r.files.empty()) std::cout << r.files.front().content;
        if (!r.summary.empty()) std::cerr << r.summary.dump() << '\n';
    } else if (!r.summary.empty()) {
        std::cout << r.summary.dump(2) << '\n';
    }
}

Separation cell_separation(const LatticeSpec& spec, const std::vector<int>& cell, int i, int ip) {
    if (cell.size() != 2) throw Error(ErrorKind::Validation, "--cell takes two integers");
    return {spec.cell_vector(cell[0], cell[1]) + spec.sublattices.at(i).position - spec.sublattices.at(ip).position,
            i, ip};
}

std::vector<Emitter> parse_emitters(const std::vector<std::string>& items, double delta, double g) {
    std::vector<Emitter> e;
    for (const auto& s : items) {
        int x = 0, y = 0;
        char comma = 0;
        std::istringstream is(s);
        if (!(is >> x >> comma >> y) || comma != ',')
            throw Error(ErrorKind::Validation, "emitter '" + s + "' is not of the form x,y");
        e.push_back({x, y, delta, g});
    }
    return e;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int dispatch(int argc, const char* const* argv);

json read_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorKind::Validation, "cannot read " + path);
    try {
        return json::parse(f);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, path + ": " + e.what());
    }
}

// A recipe names one subcommand and its flags; it is replayed through the same parser.
int run_recipe(const std::string& path) {
    const json r = read_json_file(path);
    static const std::vector<std::string> commands{"lattice", "levelset", "greens",   "scan",     "ghost",
                                                   "orbit",   "periods",  "simulate", "ensemble", "reproduce"};
    if (!r.is_object() || !r.contains("command") || !r["command"].is_string())
        throw Error(ErrorKind::Validation, "recipe needs a string 'command'");
    const std::string cmd = r["command"];
    if (std::find(commands.begin(), commands.end(), cmd) == commands.end())
        throw Error(ErrorKind::Validation, "recipe command '" + cmd + "' is not runnable");
    for (const auto& [k, v] : r.items())
        if (k != "name" && k != "command" && k != "params" && k != "args" && k != "out_dir" && k != "seed")
            throw Error(ErrorKind::Validation, "unknown recipe key '" + k + "'");
    std::vector<std::string> args{"bathwave", cmd};
    if (r.contains("args")) {
        if (!r["args"].is_array()) throw Error(ErrorKind::Validation, "'args' must be an array");
        for (const auto& a : r["args"]) args.push_back(a.is_string() ? a.get<std::string>() : a.dump());
    }
    if (r.contains("params")) {
        if (!r["params"].is_object()) throw Error(ErrorKind::Validation, "'params' must be an object");
        for (const auto& [k, v] : r["params"].items()) {
            if (v.is_boolean()) {
                if (v.get<bool>()) args.push_back("--" + k);
                continue;
            }
            args.push_back("--" + k);
            if (v.is_array())
                for (const auto& x : v) args.push_back(x.is_string() ? x.get<std::string>() : x.dump());
            else
                args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        }
    }
    if (r.contains("seed")) {
        args.push_back("--seed");
        args.push_back(r["seed"].dump());
    }
    if (r.contains("out_dir")) {
        args.push_back("--out-dir");
        args.push_back(r["out_dir"].get<std::string>());
    }
    std::vector<const char*> av;
    for (const auto& a : args) av.push_back(a.c_str());
    return dispatch(static_cast<int>(av.size()), av.data());
}

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"Wave propagation in periodic baths: Green's functions, orbits and emitter dynamics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version());

    // lattice
    auto* c_lattice = app.add_subcommand("lattice", "print a lattice document and its band extrema");
    ModelFlags m_lattice;
    OutputFlags o_lattice;
    m_lattice.add(c_lattice, false);
    o_lattice.add(c_lattice);

    // levelset
    auto* c_level = app.add_subcommand("levelset", "resonant set as CSV (curve_id, s, k_x, k_y, v_x, v_y, K, mT)");
    ModelFlags m_level;
    OutputFlags o_level;
    m_level.add(c_level);
    o_level.add(c_level);

    // greens
    auto* c_greens = app.add_subcommand("greens", "Green's function between two sites");
    ModelFlags m_greens;
    OutputFlags o_greens;
    std::vector<int> g_cell{1, 0};
    int g_i = 0, g_ip = 0;
    bool g_brute = false;
    m_greens.add(c_greens);
    o_greens.add(c_greens);
    c_greens->add_option("--cell", g_cell, "lattice cell offset p q")->expected(2);
    c_greens->add_option("--i", g_i, "sublattice of the receiver");
    c_greens->add_option("--ip", g_ip, "sublattice of the source");
    c_greens->add_flag("--brute", g_brute, "also evaluate the broadened-resolvent reference");

    // scan
    auto* c_scan = app.add_subcommand("scan", "Green's function along a lattice direction");
    ModelFlags m_scan;
    OutputFlags o_scan;
    std::vector<int> s_cell{1, 0};
    int s_min = 1, s_max = 30;
    m_scan.add(c_scan);
    o_scan.add(c_scan);
    c_scan->add_option("--cell", s_cell, "direction as a cell offset p q")->expected(2);
    c_scan->add_option("--n-min", s_min)->check(CLI::PositiveNumber);
    c_scan->add_option("--n-max", s_max)->check(CLI::PositiveNumber);

    // ghost
    auto* c_ghost = app.add_subcommand("ghost", "ghost-wave decay rates beyond the caustic");
    ModelFlags m_ghost;
    OutputFlags o_ghost;
    std::vector<double> gh_d{0.02, 0.05, 0.1, 0.2};
    m_ghost.add(c_ghost);
    o_ghost.add(c_ghost);
    c_ghost->add_option("--dtheta", gh_d, "angles past the caustic (rad)");

    // orbit
    auto* c_orbit = app.add_subcommand("orbit", "semiclassical trajectory in the effective field");
    ModelFlags m_orbit;
    OutputFlags o_orbit;
    double or_alpha = 0.01, or_periods = 1;
    std::size_t or_curve = 0, or_point = 0;
    m_orbit.add(c_orbit);
    o_orbit.add(c_orbit);
    c_orbit->add_option("--alpha", or_alpha, "flux per plaquette / 2 pi");
    c_orbit->add_option("--curve", or_curve, "resonant curve of the start point");
    c_orbit->add_option("--point", or_point, "sample index of the start point");
    c_orbit->add_option("--periods", or_periods, "duration in orbit periods (closed orbits: cyclotron periods)");

    // periods
    auto* c_periods = app.add_subcommand("periods", "spatial and temporal periods of open orbits");
    ModelFlags m_periods;
    OutputFlags o_periods;
    double pe_alpha = 0.01;
    m_periods.add(c_periods);
    o_periods.add(c_periods);
    c_periods->add_option("--alpha", pe_alpha, "flux per plaquette / 2 pi");

    // simulate and ensemble share the bath flags
    struct BathFlags {
        std::string config;
        int nx = 61, ny = 401;
        double jx = 1, jy = 2, alpha = 0.02, g = 0.1, delta = -1, chi = 0;
        std::vector<std::string> emitters{"0,0"};
        std::uint64_t seed = 1;
        void add(CLI::App* a) {
            a->add_option("--config", config, "simulation JSON document (flags below are ignored)");
            a->add_option("--nx", nx);
            a->add_option("--ny", ny);
            a->add_option("--jx", jx);
            a->add_option("--jy", jy);
            a->add_option("--alpha", alpha);
            a->add_option("--g", g);
            a->add_option("--delta", delta);
            a->add_option("--chi", chi);
            a->add_option("--emitter", emitters, "emitter site x,y (repeatable)");
            a->add_option("--seed", seed);
        }
        SimulationConfig build() const {
            if (!config.empty()) return config_from_json(read_json_file(config).dump());
            SimulationConfig c;
            c.nx = nx;
            c.ny = ny;
            c.jx = jx;
            c.jy = jy;
            c.alpha = alpha;
            c.chi = chi;
            c.seed = seed;
            c.emitters = parse_emitters(emitters, delta, g);
            c.validate();
            return c;
        }
    };

    auto* c_sim = app.add_subcommand("simulate", "single-excitation bath dynamics");
    BathFlags b_sim;
    OutputFlags o_sim;
    double sim_t = 20;
    int sim_steps = 100;
    std::vector<double> sim_snaps;
    int sim_dark = 0;
    b_sim.add(c_sim);
    o_sim.add(c_sim);
    c_sim->add_option("--t-end", sim_t)->check(CLI::PositiveNumber);
    c_sim->add_option("--steps", sim_steps)->check(CLI::PositiveNumber);
    c_sim->add_option("--snapshot", sim_snaps, "record the full bath population at these times");
    c_sim->add_option("--dark", sim_dark, "prepare the 2- or 3-emitter dark state");

    auto* c_ens = app.add_subcommand("ensemble", "disorder-averaged log populations");
    BathFlags b_ens;
    OutputFlags o_ens;
    int ens_n = 20;
    double ens_t = 20;
    int ens_threads = 0;
    b_ens.add(c_ens);
    o_ens.add(c_ens);
    c_ens->add_option("--realizations", ens_n)->check(CLI::PositiveNumber);
    c_ens->add_option("--snapshot", ens_t, "snapshot time")->check(CLI::PositiveNumber);
    c_ens->add_option("--threads", ens_threads, "worker cap (0: all cores)");

    // reproduce
    auto* c_rep = app.add_subcommand("reproduce", "regenerate the data behind a figure");
    std::string rep_id, rep_scale = "desk";
    OutputFlags o_rep;
    RunContext rep_ctx;
    c_rep->add_option("figure", rep_id, "figure id")->required()->check(CLI::IsMember(figure_ids()));
    c_rep->add_option("--scale", rep_scale, "smoke, desk or full")->check(CLI::IsMember({"smoke", "desk", "full"}));
    c_rep->add_option("--threads", rep_ctx.threads);
    c_rep->add_option("--seed", rep_ctx.seed);
    c_rep->add_option("--g", rep_ctx.g, "override the emitter coupling");
    c_rep->add_option("--alpha", rep_ctx.alpha, "override the flux");
    c_rep->add_option("--chi", rep_ctx.chi, "override the disorder strength");
    o_rep.add(c_rep);

    // run
    auto* c_run = app.add_subcommand("run", "execute a recipe JSON file");
    std::string run_file;
    c_run->add_option("recipe", run_file, "recipe file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    const auto t0 = std::chrono::steady_clock::now();
    if (*c_run) return run_recipe(run_file);

    if (*c_lattice) {
        const auto spec = m_lattice.spec();
        json j = json::parse(to_json(spec));
        json bands = json::array();
        for (int b = 0; b < spec.bands(); ++b) {
            const auto e = band_extrema(spec, b);
            bands.push_back({{"band", b}, {"min", e.min}, {"max", e.max}, {"critical", e.critical},
                             {"degenerate", e.degenerate}});
        }
        RecipeOutput r;
        r.files.push_back({"lattice.json", j.dump(2) + "\n"});
        r.summary = {{"bands", bands}};
        emit(o_lattice, "lattice", m_lattice.inputs(), r, seconds_since(t0));
        return 0;
    }
    if (*c_level) {
        const auto set = extract(m_level.spec(), m_level.band, m_level.delta);
        const auto w = winding(set);
        RecipeOutput r;
        r.files.push_back({"levelset.csv", to_csv(set)});
        json curves = json::array();
        for (const auto& c : set.curves)
            curves.push_back({{"closed", c.closed}, {"length", c.length}, {"points", c.points.size()}});
        r.summary = {{"winding", w.value}, {"winding_residual", w.residual}, {"curves", curves}};
        emit(o_level, "levelset", m_level.inputs(), r, seconds_since(t0));
        return 0;
    }
    if (*c_greens) {
        const auto spec = m_greens.spec();
        const auto sep = cell_separation(spec, g_cell, g_i, g_ip);
        const auto set = extract(spec, m_greens.band, m_greens.delta);
        const auto om = omega_exact(spec, m_greens.delta, {sep})[0];
        const cplx ga = gamma(set, sep);
        json j = {{"rho", {sep.rho.x(), sep.rho.y()}},
                  {"Omega", {om.value.real(), om.value.imag()}},
                  {"Omega_error", om.error},
                  {"Gamma", {ga.real(), ga.imag()}}};
        try {
            const cplx t = tube_approximant(set, sep, 0.85 / 0.9 * max_tube_width(set));
            j["G_tube"] = {t.real(), t.imag()};
        } catch (const Error&) {
        }
        try {
            const cplx s = stationary_phase(set, sep);
            j["G_stationary"] = {s.real(), s.imag()};
        } catch (const Error& e) {
            j["G_stationary"] = to_string(e.kind());
        }
        if (g_brute) {
            const auto b = omega_brute(spec, m_greens.delta, sep);
            j["brute"] = {{"Omega", {b.omega.real(), b.omega.imag()}}, {"Gamma", {b.gamma.real(), b.gamma.imag()}},
                          {"error", b.error}};
        }
        RecipeOutput r;
        r.files.push_back({"greens.json", j.dump(2) + "\n"});
        json in = m_greens.inputs();
        in["cell"] = g_cell;
        in["i"] = g_i;
        in["ip"] = g_ip;
        emit(o_greens, "greens", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_scan) {
        if (s_max < s_min) throw Error(ErrorKind::Validation, "--n-max below --n-min");
        const auto spec = m_scan.spec();
        const auto step = cell_separation(spec, s_cell, 0, 0).rho;
        std::vector<Separation> seps;
        for (int n = s_min; n <= s_max; ++n) seps.push_back({n * step, 0, 0});
        const auto ex = omega_exact(spec, m_scan.delta, seps);
        const auto set = refine_for(extract(spec, m_scan.band, m_scan.delta), s_max * step.norm());
        Table t{{"n", "theta", "Omega", "Gamma", "abs_G", "phase"}, {}};
        for (std::size_t q = 0; q < seps.size(); ++q) {
            const double om = ex[q].value.real(), ga = gamma(set, seps[q]).real();
            const cplx G(om, -0.5 * ga);
            t.add({double(s_min + q), std::atan2(step.y(), step.x()), om, ga, std::abs(G), std::arg(G)});
        }
        RecipeOutput r;
        r.files.push_back({"scan.csv", t.to_csv()});
        json in = m_scan.inputs();
        in["cell"] = s_cell;
        in["n"] = {s_min, s_max};
        emit(o_scan, "scan", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_ghost) {
        const auto set = extract(m_ghost.spec(), m_ghost.band, m_ghost.delta);
        const double tc = caustic_angle(set);
        std::vector<double> th;
        for (double d : gh_d) th.push_back(tc - d);
        const auto g = ghost_scan(set, tc, th);
        Table t{{"theta", "dtheta", "kappa_exact", "kappa_fit", "r2"}, {}};
        for (std::size_t i = 0; i < g.fits.size(); ++i)
            t.add({g.fits[i].direction.theta, g.dtheta[i], g.fits[i].kappa, g.kappa_model(g.dtheta[i]),
                   g.fits[i].r2});
        RecipeOutput r;
        r.files.push_back({"ghost.csv", t.to_csv()});
        r.summary = {{"kappa", g.prefactor}, {"p", g.exponent}, {"r2", g.r2}, {"theta_c", tc}};
        r.files.push_back({"ghost_fit.json", r.summary.dump(2)});
        json in = m_ghost.inputs();
        in["dtheta"] = gh_d;
        emit(o_ghost, "ghost", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_orbit) {
        const auto spec = m_orbit.spec();
        const auto set = extract(spec, m_orbit.band, m_orbit.delta);
        if (or_curve >= set.curves.size() || or_point >= set.curves[or_curve].points.size())
            throw Error(ErrorKind::Validation, "start point out of range");
        double period;
        try {
            period = orbit_periods(set, or_alpha)[0].tau;
        } catch (const Error&) {
            // closed sheet: the cyclotron period is the same quadrature over the closed curve
            double s = 0;
            for (const auto& p : set.curves[or_curve].points) s += 1.0 / p.speed;
            period = s * set.curves[or_curve].step / field_strength(spec, or_alpha);
        }
        const auto tr = integrate_orbit(spec, m_orbit.band, set.curves[or_curve].points[or_point].k, Vec2::Zero(),
                                        or_alpha, or_periods * period);
        Table t{{"t", "x", "y", "kx", "ky"}, {}};
        for (const auto& s : tr.samples) t.add({s.t, s.r.x(), s.r.y(), s.k.x(), s.k.y()});
        RecipeOutput r;
        r.files.push_back({"orbit.csv", t.to_csv()});
        r.summary = {{"kind", to_string(tr.kind)},
                     {"period", tr.period},
                     {"drift", {tr.drift.x(), tr.drift.y()}},
                     {"max_energy_drift", tr.max_energy_drift}};
        json in = m_orbit.inputs();
        in["alpha"] = or_alpha;
        in["curve"] = or_curve;
        in["point"] = or_point;
        emit(o_orbit, "orbit", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_periods) {
        const auto set = extract(m_periods.spec(), m_periods.band, m_periods.delta);
        json arr = json::array();
        for (const auto& p : orbit_periods(set, pe_alpha))
            arr.push_back({{"curve", p.curve},
                           {"l", {p.l.x(), p.l.y()}},
                           {"l_norm", p.l.norm()},
                           {"tau", p.tau},
                           {"transverse_extent", p.transverse_extent}});
        RecipeOutput r;
        r.files.push_back({"periods.json", arr.dump(2) + "\n"});
        json in = m_periods.inputs();
        in["alpha"] = pe_alpha;
        emit(o_periods, "periods", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_sim) {
        const auto c = b_sim.build();
        const auto init = sim_dark ? dark_state(c, sim_dark) : excited_emitter(c, 0);
        std::vector<double> ts;
        for (int i = 0; i <= sim_steps; ++i) ts.push_back(sim_t * i / sim_steps);
        EvolveOptions o;
        o.snapshot_times = sim_snaps;
        const auto res = evolve(c, init, ts, o);
        Table t{{"t"}, {}};
        for (std::size_t e = 0; e < c.emitters.size(); ++e) t.columns.push_back("P" + std::to_string(e));
        for (std::size_t i = 0; i < ts.size(); ++i) {
            std::vector<double> row{ts[i]};
            row.insert(row.end(), res.emitter_pop[i].begin(), res.emitter_pop[i].end());
            t.add(row);
        }
        RecipeOutput r;
        r.files.push_back({"emitters.csv", t.to_csv()});
        for (std::size_t s = 0; s < res.snapshots.size(); ++s) {
            std::ostringstream name;
            name << "snapshot_t" << res.snapshot_times[s] << ".csv";
            r.files.push_back({name.str(), snapshot_csv(c, res.snapshots[s])});
        }
        r.files.push_back({"config.json", to_json(c)});
        r.summary = {{"norm_drift", res.norm_drift}, {"edge_population", res.edge_pop}, {"krylov_steps", res.steps}};
        emit(o_sim, "simulate", json::parse(to_json(c)), r, seconds_since(t0));
        return 0;
    }
    if (*c_ens) {
        const auto c = b_ens.build();
        const auto e = disorder_ensemble(c, excited_emitter(c, 0), ens_n, {ens_t}, ens_threads);
        Table t{{"site", "mean_log_pop", "std_log_pop"}, {}};
        for (int i = 0; i < c.sites(); ++i) t.add({double(i), e.mean_log[0][i], e.std_log[0][i]});
        RecipeOutput r;
        r.files.push_back({"ensemble.csv", t.to_csv()});
        r.files.push_back({"config.json", to_json(c)});
        json in = json::parse(to_json(c));
        in["realizations"] = ens_n;
        in["snapshot"] = ens_t;
        emit(o_ens, "ensemble", in, r, seconds_since(t0));
        return 0;
    }
    if (*c_rep) {
        rep_ctx.scale = parse_scale(rep_scale);
        rep_ctx.log = [](const std::string& m) { std::cerr << "[reproduce] " << m << '\n'; };
        const auto r = reproduce(rep_id, rep_ctx);
        json in = {{"figure", rep_id}, {"scale", rep_scale}, {"seed", rep_ctx.seed}};
        if (!std::isnan(rep_ctx.g)) in["g"] = rep_ctx.g;
        if (!std::isnan(rep_ctx.alpha)) in["alpha"] = rep_ctx.alpha;
        if (!std::isnan(rep_ctx.chi)) in["chi"] = rep_ctx.chi;
        OutputFlags o = o_rep;
        if (o.out.empty() && o.out_dir.empty()) o.out_dir = rep_id;
        emit(o, rep_id, in, r, seconds_since(t0));
        return 0;
    }
    return kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << '\n';
        return e.is_validation() ? kExitValidation : kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
