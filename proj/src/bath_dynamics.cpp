#include "bathwave/bath_dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "bathwave/fit.hpp"

namespace bathwave {

using json = nlohmann::json;

bool SimulationConfig::contains(int x, int y) const {
    return x >= x_min() && x < x_min() + nx && y >= y_min() && y < y_min() + ny;
}

int SimulationConfig::site_index(int x, int y) const {
    if (!contains(x, y)) throw Error(ErrorKind::Validation, "site outside the lattice");
    return (y - y_min()) * nx + (x - x_min());
}

std::array<int, 2> SimulationConfig::site_coords(int index) const {
    return {index % nx + x_min(), index / nx + y_min()};
}

void SimulationConfig::validate() const {
    if (nx < 2 || ny < 2) throw Error(ErrorKind::Validation, "lattice needs at least 2x2 sites");
    if (static_cast<long long>(nx) * ny > 50'000'000) throw Error(ErrorKind::Validation, "lattice too large");
    if (!std::isfinite(jx) || !std::isfinite(jy) || !std::isfinite(alpha))
        throw Error(ErrorKind::Validation, "non-finite lattice parameter");
    if (!(chi >= 0) || !std::isfinite(chi)) throw Error(ErrorKind::Validation, "disorder must be non-negative");
    for (const auto& e : emitters) {
        if (!contains(e.x, e.y)) throw Error(ErrorKind::Validation, "emitter site out of bounds");
        if (!std::isfinite(e.delta) || !std::isfinite(e.g)) throw Error(ErrorKind::Validation, "non-finite emitter");
    }
    for (const auto& o : obstructions)
        if (!contains(o[0], o[1])) throw Error(ErrorKind::Validation, "obstruction site out of bounds");
}

std::string to_json(const SimulationConfig& c) {
    json j;
    j["nx"] = c.nx;
    j["ny"] = c.ny;
    j["jx"] = c.jx;
    j["jy"] = c.jy;
    j["alpha"] = c.alpha;
    j["chi"] = c.chi;
    j["seed"] = c.seed;
    j["emitters"] = json::array();
    for (const auto& e : c.emitters) j["emitters"].push_back({{"x", e.x}, {"y", e.y}, {"delta", e.delta}, {"g", e.g}});
    j["obstructions"] = c.obstructions;
    return j.dump(2);
}

SimulationConfig config_from_json(const std::string& text) {
    SimulationConfig c;
    try {
        const json j = json::parse(text);
        c.nx = j.value("nx", c.nx);
        c.ny = j.value("ny", c.ny);
        c.jx = j.value("jx", c.jx);
        c.jy = j.value("jy", c.jy);
        c.alpha = j.value("alpha", c.alpha);
        c.chi = j.value("chi", c.chi);
        c.seed = j.value("seed", c.seed);
        if (j.contains("emitters"))
            for (const auto& e : j.at("emitters"))
                c.emitters.push_back({e.at("x").get<int>(), e.at("y").get<int>(), e.value("delta", -1.0),
                                      e.value("g", 0.1)});
        if (j.contains("obstructions")) c.obstructions = j.at("obstructions").get<std::vector<std::array<int, 2>>>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("bad simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

cplx SparseHamiltonian::at(int i, int j) const {
    const auto b = cols.begin() + row_ptr[i], e = cols.begin() + row_ptr[i + 1];
    const auto it = std::lower_bound(b, e, j);
    return it != e && *it == j ? vals[it - cols.begin()] : cplx{0, 0};
}

double SparseHamiltonian::norm_bound() const {
    double m = 0;
    for (int i = 0; i < dim; ++i) {
        double s = 0;
        for (auto j = row_ptr[i]; j < row_ptr[i + 1]; ++j) s += std::abs(vals[j]);
        m = std::max(m, s);
    }
    return m;
}

SparseHamiltonian build_hamiltonian(const SimulationConfig& c, std::uint64_t realization) {
    c.validate();
    const int n = c.sites(), dim = c.dimension();
    std::vector<char> blocked(n, 0);
    for (const auto& o : c.obstructions) blocked[c.site_index(o[0], o[1])] = 1;

    std::vector<double> onsite(n, 0.0);
    if (c.chi > 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                          static_cast<std::uint32_t>(realization), static_cast<std::uint32_t>(realization >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> X(-c.chi, c.chi);
        for (auto& e : onsite) e = X(rng) * c.jx;
    }

    // symmetric gauge A = pi alpha (-y, x), curl 2 pi alpha; phi_ij = A(mid).(r_j - r_i)
    const double half_b = std::numbers::pi * c.alpha;
    auto hop = [&](int xi, int yi, int xj, int yj, double J) {
        const double mx = 0.5 * (xi + xj), my = 0.5 * (yi + yj);
        const double phi = half_b * (-my * (xj - xi) + mx * (yj - yi));
        return std::polar(J, phi);
    };

    std::vector<std::vector<std::pair<std::int32_t, cplx>>> rows(dim);
    for (int i = 0; i < n; ++i) {
        const auto [x, y] = c.site_coords(i);
        if (onsite[i] != 0) rows[i].push_back({i, onsite[i]});
        if (blocked[i]) continue;
        const std::array<std::array<int, 2>, 4> nb{{{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}}};
        for (int d = 0; d < 4; ++d) {
            const int xj = nb[d][0], yj = nb[d][1];
            if (!c.contains(xj, yj)) continue;
            const int j = c.site_index(xj, yj);
            if (blocked[j]) continue;
            rows[i].push_back({j, hop(x, y, xj, yj, d < 2 ? c.jx : c.jy)});
        }
    }
    for (std::size_t e = 0; e < c.emitters.size(); ++e) {
        const auto& em = c.emitters[e];
        const int ie = n + static_cast<int>(e), is = c.site_index(em.x, em.y);
        rows[ie].push_back({ie, em.delta});
        if (em.g != 0) {
            rows[ie].push_back({is, em.g});
            rows[is].push_back({ie, em.g});
        }
    }

    SparseHamiltonian h;
    h.dim = dim;
    h.row_ptr.reserve(dim + 1);
    h.row_ptr.push_back(0);
    for (auto& r : rows) {
        std::sort(r.begin(), r.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        for (const auto& [j, v] : r) {
            h.cols.push_back(j);
            h.vals.push_back(v);
        }
        h.row_ptr.push_back(static_cast<std::int32_t>(h.cols.size()));
    }
    return h;
}

double plaquette_flux(const SparseHamiltonian& h, const SimulationConfig& c, int x, int y) {
    const int p[4] = {c.site_index(x, y), c.site_index(x + 1, y), c.site_index(x + 1, y + 1), c.site_index(x, y + 1)};
    double s = 0;
    for (int k = 0; k < 4; ++k) {
        const cplx v = h.at(p[k], p[(k + 1) % 4]);
        if (v == cplx{0, 0}) throw Error(ErrorKind::Validation, "plaquette has a missing bond");
        s += std::arg(v);
    }
    return s;
}

double ExcitationState::norm2() const {
    double s = 0;
    for (const auto& a : c) s += std::norm(a);
    for (const auto& a : psi) s += std::norm(a);
    return s;
}

ExcitationState excited_emitter(const SimulationConfig& c, int which) {
    if (which < 0 || which >= static_cast<int>(c.emitters.size()))
        throw Error(ErrorKind::Validation, "emitter index out of range");
    ExcitationState s;
    s.c.assign(c.emitters.size(), 0.0);
    s.psi.assign(c.sites(), 0.0);
    s.c[which] = 1.0;
    return s;
}

ExcitationState dark_state(const SimulationConfig& c, int n_emitters) {
    std::vector<double> amp;
    if (n_emitters == 2)
        amp = {1 / std::sqrt(2.0), -1 / std::sqrt(2.0)};
    else if (n_emitters == 3)
        amp = {1 / std::sqrt(6.0), -2 / std::sqrt(6.0), 1 / std::sqrt(6.0)};
    else
        throw Error(ErrorKind::Validation, "dark states exist here for 2 or 3 emitters only");
    if (static_cast<int>(c.emitters.size()) != n_emitters)
        throw Error(ErrorKind::Validation, "configuration has a different number of emitters");
    ExcitationState s;
    s.c.assign(amp.begin(), amp.end());
    s.psi.assign(c.sites(), 0.0);
    return s;
}

namespace {

// One Krylov basis serves every sub-step length; the step is the longest one whose
// a posteriori estimate beta_m |[exp(-i T dt)]_{m,1}| stays below tol.
class Lanczos {
public:
    Lanczos(const SparseHamiltonian& h, int m) : h_(h), m_(m), k_(simd::kernels()), basis_(m + 1) {
        for (auto& v : basis_) v.resize(h.dim);
    }

    // builds the basis at psi and returns the longest admissible step up to dt_max
    double build(const std::vector<cplx>& psi, double dt_max, double tol, std::size_t& matvecs) {
        const std::size_t n = psi.size();
        beta0_ = std::sqrt(k_.norm2(psi.data(), n));
        const double beta0 = beta0_;
        m_used_ = 0;
        if (beta0 == 0) return dt_max;
        for (std::size_t i = 0; i < n; ++i) basis_[0][i] = psi[i] / beta0;
        std::vector<double> a, b;
        int m = 0;
        bool exact = false;
        const double scale = std::max(h_.norm_bound(), 1e-300);
        for (int j = 0; j < m_; ++j) {
            auto& w = basis_[j + 1];
            simd::kernels().csr_matvec(h_.view(), basis_[j].data(), w.data());
            ++matvecs;
            const double aj = k_.dotc(basis_[j].data(), w.data(), n).real();
            k_.axpy(-aj, basis_[j].data(), w.data(), n);
            if (j > 0) k_.axpy(-b[j - 1], basis_[j - 1].data(), w.data(), n);
            // one pass of local reorthogonalization against the last two vectors
            const cplx c0 = k_.dotc(basis_[j].data(), w.data(), n);
            k_.axpy(-c0, basis_[j].data(), w.data(), n);
            if (j > 0) {
                const cplx c1 = k_.dotc(basis_[j - 1].data(), w.data(), n);
                k_.axpy(-c1, basis_[j - 1].data(), w.data(), n);
            }
            a.push_back(aj + c0.real());
            const double bj = std::sqrt(k_.norm2(w.data(), n));
            b.push_back(bj);
            m = j + 1;
            if (bj < 1e-13 * scale) {
                exact = true;
                break;
            }
            for (std::size_t i = 0; i < n; ++i) w[i] /= bj;
        }
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int j = 0; j < m; ++j) {
            T(j, j) = a[j];
            if (j + 1 < m) T(j, j + 1) = T(j + 1, j) = b[j];
        }
        es_.compute(T);
        m_used_ = m;
        auto error = [&](double dt) { return exact ? 0.0 : b[m - 1] * std::abs(coeffs(dt)[m - 1]); };
        if (error(dt_max) <= tol) return dt_max;
        double lo = 0, hi = dt_max;
        for (int it = 0; it < 60 && hi - lo > 1e-12 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (error(mid) > tol ? hi : lo) = mid;
        }
        if (lo <= 0) throw Error(ErrorKind::Unstable, "Krylov step collapsed");
        return lo;
    }

    // state a time dt after the one the basis was built from
    void apply(double dt, std::vector<cplx>& out) const {
        std::fill(out.begin(), out.end(), cplx{0, 0});
        if (m_used_ == 0) return;
        const Eigen::VectorXcd cf = coeffs(dt);
        for (int j = 0; j < m_used_; ++j) k_.axpy(beta0_ * cf[j], basis_[j].data(), out.data(), out.size());
    }

private:
    const SparseHamiltonian& h_;
    int m_;
    const simd::KernelTable& k_;
    std::vector<std::vector<cplx>> basis_;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_;
    double beta0_ = 0;
    int m_used_ = 0;

    Eigen::VectorXcd coeffs(double dt) const {
        const auto& lam = es_.eigenvalues();
        const auto& Q = es_.eigenvectors();
        Eigen::VectorXcd d(m_used_);
        for (int i = 0; i < m_used_; ++i) d[i] = Q(0, i) * std::exp(cplx(0, -lam[i] * dt));
        return Q.cast<cplx>() * d;
    }
};

}  // namespace

EvolveResult evolve(const SparseHamiltonian& h, const SimulationConfig& c, const ExcitationState& initial,
                    const std::vector<double>& t_grid, const EvolveOptions& opt) {
    const int n = c.sites(), ne = static_cast<int>(c.emitters.size());
    if (h.dim != c.dimension()) throw Error(ErrorKind::Validation, "Hamiltonian does not match the configuration");
    if (static_cast<int>(initial.psi.size()) != n || static_cast<int>(initial.c.size()) != ne)
        throw Error(ErrorKind::Validation, "initial state does not match the configuration");
    const double n0 = initial.norm2();
    if (std::abs(n0 - 1) > 1e-9) throw Error(ErrorKind::Validation, "initial state is not normalized");
    if (opt.krylov_dim < 2 || !(opt.step_tol > 0)) throw Error(ErrorKind::Validation, "bad propagator options");
    for (std::size_t i = 0; i < t_grid.size(); ++i)
        if (!(t_grid[i] >= initial.t) || (i > 0 && !(t_grid[i] > t_grid[i - 1])))
            throw Error(ErrorKind::Validation, "time grid must increase from the initial time");

    std::vector<double> snaps = opt.snapshot_times;
    std::sort(snaps.begin(), snaps.end());
    if (!snaps.empty() && snaps.front() < initial.t)
        throw Error(ErrorKind::Validation, "snapshot before the initial time");
    std::vector<double> stops(t_grid);
    stops.insert(stops.end(), snaps.begin(), snaps.end());
    std::sort(stops.begin(), stops.end());
    stops.erase(std::unique(stops.begin(), stops.end()), stops.end());

    std::vector<char> edge(n, 0);
    for (int i = 0; i < n; ++i) {
        const auto [x, y] = c.site_coords(i);
        edge[i] = x == c.x_min() || x == c.x_min() + c.nx - 1 || y == c.y_min() || y == c.y_min() + c.ny - 1;
    }

    std::vector<cplx> psi(h.dim);
    std::copy(initial.psi.begin(), initial.psi.end(), psi.begin());
    std::copy(initial.c.begin(), initial.c.end(), psi.begin() + n);

    EvolveResult out;
    Lanczos lz(h, opt.krylov_dim);
    std::size_t gi = 0, si = 0;
    auto record = [&](const std::vector<cplx>& v, double at) {
        double norm = 0, e = 0;
        for (int i = 0; i < h.dim; ++i) {
            norm += std::norm(v[i]);
            if (i < n && edge[i]) e = std::max(e, std::norm(v[i]));
        }
        out.norm_drift = std::max(out.norm_drift, std::abs(norm - n0));
        out.edge_pop = std::max(out.edge_pop, e);
        if (out.norm_drift > opt.max_norm_drift)
            throw Error(ErrorKind::NormDrift,
                        "norm drift " + std::to_string(out.norm_drift) + " at t = " + std::to_string(at));
        if (gi < t_grid.size() && t_grid[gi] == at) {
            out.times.push_back(at);
            std::vector<double> p(ne);
            for (int k = 0; k < ne; ++k) p[k] = std::norm(v[n + k]);
            out.emitter_pop.push_back(std::move(p));
            ++gi;
        }
        while (si < snaps.size() && snaps[si] == at) {
            std::vector<double> p(n);
            for (int i = 0; i < n; ++i) p[i] = std::norm(v[i]);
            out.snapshot_times.push_back(at);
            out.snapshots.push_back(std::move(p));
            ++si;
        }
    };

    // one basis serves every output time inside its admissible step
    std::vector<cplx> tmp(h.dim);
    double t = initial.t;
    std::size_t k = 0;
    while (k < stops.size()) {
        if (stops[k] <= t) {
            record(psi, stops[k++]);
            continue;
        }
        const double span = lz.build(psi, stops.back() - t, opt.step_tol, out.matvecs);
        ++out.steps;
        const double t_end = t + span;
        bool landed = false;
        const double slack = 1e-14 * std::max(1.0, std::abs(t_end));
        while (k < stops.size() && stops[k] <= t_end + slack) {
            lz.apply(stops[k] - t, tmp);
            record(tmp, stops[k]);
            landed = stops[k] >= t_end - slack || k + 1 == stops.size();
            ++k;
        }
        if (landed) {
            psi.swap(tmp);
            t = stops[k - 1];
        } else {
            lz.apply(span, psi);
            t = t_end;
        }
    }
    return out;
}

EvolveResult evolve(const SimulationConfig& c, const ExcitationState& initial, const std::vector<double>& t_grid,
                    const EvolveOptions& opt) {
    return evolve(build_hamiltonian(c), c, initial, t_grid, opt);
}

std::vector<double> row_slice(const SimulationConfig& c, const std::vector<double>& snapshot, int y) {
    if (static_cast<int>(snapshot.size()) != c.sites()) throw Error(ErrorKind::Validation, "snapshot size mismatch");
    if (!c.contains(c.x_min(), y)) throw Error(ErrorKind::Validation, "slice row outside the lattice");
    const int i0 = c.site_index(c.x_min(), y);
    return {snapshot.begin() + i0, snapshot.begin() + i0 + c.nx};
}

RefocusMetric refocusing_metric(const std::vector<double>& slice, int x0) {
    double total = 0;
    for (double p : slice) total += p;
    if (slice.empty() || !(total > 0)) throw Error(ErrorKind::EmptySlice, "slice carries no population");
    const auto it = std::max_element(slice.begin(), slice.end());
    const int ip = static_cast<int>(it - slice.begin());
    const double peak = *it, half = 0.5 * peak;
    RefocusMetric m;
    m.peak_site = x0 + ip;
    m.peak_fraction = peak / total;
    // interpolated half-maximum crossings
    double left = 0, right = static_cast<double>(slice.size() - 1);
    for (int i = ip; i > 0; --i)
        if (slice[i - 1] < half) {
            left = i - (slice[i] - half) / (slice[i] - slice[i - 1]);
            break;
        }
    for (int i = ip; i + 1 < static_cast<int>(slice.size()); ++i)
        if (slice[i + 1] < half) {
            right = i + (slice[i] - half) / (slice[i] - slice[i + 1]);
            break;
        }
    m.fwhm_sites = right - left;
    double nb = 0;
    if (ip > 0) nb = std::max(nb, slice[ip - 1]);
    if (ip + 1 < static_cast<int>(slice.size())) nb = std::max(nb, slice[ip + 1]);
    m.neighbour_decades = std::log10(peak / std::max(nb, kLogFloor));
    return m;
}

RefocusMetric refocusing_metric(const SimulationConfig& c, const std::vector<double>& snapshot, int slice_y) {
    return refocusing_metric(row_slice(c, snapshot, slice_y), c.x_min());
}

EnsembleResult disorder_ensemble(const SimulationConfig& c, const ExcitationState& initial, int n_realizations,
                                 const std::vector<double>& snapshot_times, int threads, const EvolveOptions& opt) {
    if (n_realizations < 1) throw Error(ErrorKind::Validation, "need at least one realization");
    if (snapshot_times.empty()) throw Error(ErrorKind::Validation, "no snapshot times");
    c.validate();
    const int n = c.sites();
    std::vector<double> times(snapshot_times);
    std::sort(times.begin(), times.end());
    EvolveOptions o = opt;
    o.snapshot_times = times;

    // logs per realization are kept so the reduction order never depends on scheduling
    std::vector<std::vector<std::vector<float>>> logs(n_realizations);
    std::vector<std::vector<double>> first;   // realization 0 in full precision, the shift for the moments
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex fail_mu;
    auto worker = [&] {
        for (int r; (r = next++) < n_realizations;) {
            try {
                const auto res = evolve(build_hamiltonian(c, r), c, initial, {}, o);
                if (r == 0) {
                    first.resize(times.size());
                    for (std::size_t s = 0; s < times.size(); ++s) {
                        first[s].resize(n);
                        for (int i = 0; i < n; ++i) first[s][i] = std::log10(std::max(res.snapshots[s][i], kLogFloor));
                    }
                }
                logs[r].resize(times.size());
                for (std::size_t s = 0; s < times.size(); ++s) {
                    logs[r][s].resize(n);
                    for (int i = 0; i < n; ++i)
                        logs[r][s][i] = static_cast<float>(std::log10(std::max(res.snapshots[s][i], kLogFloor)));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lk(fail_mu);
                if (!failure) failure = std::current_exception();
                next = n_realizations;
            }
        }
    };
    int nt = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nt = std::min(nt, n_realizations);
    std::vector<std::thread> pool;
    for (int k = 1; k < nt; ++k) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);

    EnsembleResult out;
    out.snapshot_times = times;
    out.realizations = n_realizations;
    out.mean_log.assign(times.size(), std::vector<double>(n));
    out.std_log.assign(times.size(), std::vector<double>(n));
    for (std::size_t s = 0; s < times.size(); ++s) {
        for (int i = 0; i < n; ++i) {
            // moments of the deviation from realization 0: a clean ensemble gives exactly zero spread
            const double x0 = first[s][i];
            const double l0 = logs[0][s][i];
            double sd = 0, sd2 = 0;
            for (int r = 1; r < n_realizations; ++r) {
                const double d = static_cast<double>(logs[r][s][i]) - l0;
                sd += d;
                sd2 += d * d;
            }
            out.mean_log[s][i] = x0 + sd / n_realizations;
            const double var = n_realizations > 1 ? (sd2 - sd * sd / n_realizations) / (n_realizations - 1) : 0.0;
            out.std_log[s][i] = std::sqrt(std::max(var, 0.0));
        }
    }
    return out;
}

MarkovFit markov_fit(const std::vector<double>& t, const std::vector<double>& pop, double t0, double t1) {
    if (t.size() != pop.size()) throw Error(ErrorKind::Validation, "time and population lengths differ");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t[i] >= t0 && t[i] <= t1 && pop[i] > 0) {
            x.push_back(t[i]);
            y.push_back(-std::log(pop[i]));
        }
    if (x.size() < 3) throw Error(ErrorKind::FitUnreliable, "too few samples in the fit window");
    const auto f = linear_fit(x, y);
    return {f.slope, f.r2, f.n};
}

}  // namespace bathwave
