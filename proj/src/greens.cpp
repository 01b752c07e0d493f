#include "bathwave/greens.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <unsupported/Eigen/FFT>

#include "bathwave/phase_function.hpp"
#include "bathwave/simd/kernels.hpp"

namespace bathwave {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2 * kPi;
const cplx I{0.0, 1.0};

using lcplx = std::complex<long double>;

// e^{i k.rho} with the product and its reduction carried in extended precision;
// at rho ~ 30 a plain double phase error already reaches the size of the result.
cplx plane_wave(const Vec2& k, const Vec2& rho) {
    const long double ph = (long double)k.x() * rho.x() + (long double)k.y() * rho.y();
    const long double two_pi = 6.283185307179586476925286766559L;
    const double red = double(ph - two_pi * std::nearbyint(ph / two_pi));
    return {std::cos(red), std::sin(red)};
}

void check_sep(const LatticeSpec& spec, const Separation& r) {
    if (r.i < 0 || r.ip < 0 || r.i >= spec.bands() || r.ip >= spec.bands())
        throw Error(ErrorKind::Validation, "sublattice index out of range");
    if (!r.rho.allFinite()) throw Error(ErrorKind::Validation, "separation must be finite");
}

struct ContourSample {
    Vec2 k;
    Vec2 v;
    double w;  // ds / v
    cplx p;    // projector element (i, ip) in the position gauge
};

// Line elements |dk/dt| dt from a spectral derivative of the sampled curve. The
// tracer's arclength is only accurate to integration error, which biases the
// trapezoid sums once they cancel below ~1e-13.
std::vector<double> line_elements(const ResonantCurve& c) {
    const int n = int(c.points.size());
    std::vector<cplx> z(n), f;
    for (int j = 0; j < n; ++j) {
        const Vec2 p = c.points[j].k - (double(j) / n) * c.shift_k;
        z[j] = cplx(p.x(), p.y());
    }
    Eigen::FFT<double> fft;
    fft.fwd(f, z);
    std::vector<cplx> dre(n), dim(n);
    // x and y are packed as real and imaginary parts; differentiate each separately
    std::vector<cplx> fx(n), fy(n);
    for (int m = 0; m < n; ++m) {
        const cplx a = f[m], b = std::conj(f[(n - m) % n]);
        fx[m] = 0.5 * (a + b);
        fy[m] = -0.5 * I * (a - b);
        int mm = m <= n / 2 ? m : m - n;
        if (2 * mm == n) mm = 0;
        fx[m] *= cplx(0, kTwoPi * mm);
        fy[m] *= cplx(0, kTwoPi * mm);
    }
    fft.inv(dre, fx);
    fft.inv(dim, fy);
    std::vector<double> ds(n);
    for (int j = 0; j < n; ++j)
        ds[j] = Vec2(dre[j].real() + c.shift_k.x(), dim[j].real() + c.shift_k.y()).norm() / n;
    return ds;
}

std::vector<ContourSample> samples(const ResonantSet& set, const ResonantCurve& c, int i, int ip) {
    std::vector<ContourSample> out;
    out.reserve(c.points.size());
    const std::vector<double> ds = line_elements(c);
    for (std::size_t j = 0; j < c.points.size(); ++j) {
        const auto& pt = c.points[j];
        cplx p = 1.0;
        if (set.spec.bands() > 1) p = band_local(set.spec, pt.k, set.band).projector(i, ip);
        out.push_back({pt.k, pt.v, ds[j] / pt.speed, p});
    }
    return out;
}

double max_rho(const std::vector<Separation>& seps) {
    double m = 0;
    for (const auto& s : seps) m = std::max(m, s.rho.norm());
    return m;
}

}  // namespace

std::array<int, 2> cell_offset(const LatticeSpec& spec, const Separation& r) {
    check_sep(spec, r);
    const Vec2 R = r.rho - (spec.sublattices[r.i].position - spec.sublattices[r.ip].position);
    Eigen::Matrix2d A;
    A.col(0) = spec.a[0];
    A.col(1) = spec.a[1];
    const Vec2 m = A.inverse() * R;
    const std::array<int, 2> out{int(std::lround(m.x())), int(std::lround(m.y()))};
    if (std::abs(m.x() - out[0]) > 1e-9 || std::abs(m.y() - out[1]) > 1e-9)
        throw Error(ErrorKind::Validation, "separation is not a lattice displacement for these sublattices");
    return out;
}

std::vector<cplx> gamma_by_curve(const ResonantSet& in, const Separation& r) {
    check_sep(in.spec, r);
    const ResonantSet set = refine_for(in, r.rho.norm());
    std::vector<cplx> out;
    const double pref = set.spec.cell_area() / kTwoPi;
    for (const auto& c : set.curves) {
        // extended accumulation: deep in the ghost regime the sum cancels to ~1e-14
        lcplx acc = 0;
        for (const auto& s : samples(set, c, r.i, r.ip)) acc += lcplx(s.w * s.p * plane_wave(s.k, r.rho));
        out.push_back(pref * cplx(acc));
    }
    return out;
}

cplx gamma(const ResonantSet& set, const Separation& r) {
    cplx g = 0;
    for (cplx c : gamma_by_curve(set, r)) g += c;
    return g;
}

namespace {

// Rows of the periodic-gauge Bloch matrix on an N x N grid of reduced momenta,
// assembled from per-coupling phase tables.
class GridRows {
public:
    GridRows(const LatticeSpec& spec, int n) : spec_(spec), n_(n), nb_(spec.bands()) {
        for (const auto& c : spec.couplings) {
            auto it = tables_.find(c.cell[0]);
            if (it == tables_.end()) {
                std::vector<cplx> t(n);
                for (int j = 0; j < n; ++j) t[j] = std::polar(1.0, kTwoPi * c.cell[0] * double(j) / n);
                tables_.emplace(c.cell[0], std::move(t));
            }
        }
        entries_.assign(nb_ * nb_, std::vector<cplx>(n));
    }

    // Fill entry (a, b) for row u2 = j2 / N.
    void fill(int j2) {
        for (auto& e : entries_) std::fill(e.begin(), e.end(), cplx(0));
        const double u2 = double(j2) / n_;
        const auto& K = simd::kernels();
        for (const auto& c : spec_.couplings) {
            const cplx coef = c.amplitude * std::polar(1.0, kTwoPi * c.cell[1] * u2);
            K.axpy(coef, tables_.at(c.cell[0]).data(), entries_[c.from * nb_ + c.to].data(), n_);
        }
    }

    const std::vector<cplx>& entry(int a, int b) const { return entries_[a * nb_ + b]; }
    int n() const { return n_; }

private:
    const LatticeSpec& spec_;
    int n_, nb_;
    std::map<int, std::vector<cplx>> tables_;
    std::vector<std::vector<cplx>> entries_;
};

std::vector<cplx> phase_table(int n, int m) {
    std::vector<cplx> t(n);
    for (int j = 0; j < n; ++j) t[j] = std::polar(1.0, kTwoPi * double((long(m) * j) % n) / n);
    return t;
}

// sum over eigenpairs of f(w) P_{ab} for a Hermitian Bloch matrix at one k
template <class F>
cplx matrix_function_element(const GridRows& rows, int j, int a, int b, int nb, F&& f) {
    if (nb == 1) return f(rows.entry(0, 0)[j].real());
    if (nb == 2) {
        const double d0 = rows.entry(0, 0)[j].real(), d1 = rows.entry(1, 1)[j].real();
        const cplx o = rows.entry(0, 1)[j];
        const double m = 0.5 * (d0 + d1), dz = 0.5 * (d0 - d1);
        const double r = std::sqrt(dz * dz + std::norm(o));
        const double gp = f(m + r), gm = f(m - r);
        // (g+ - g-) / (2 r), continuous through a band touching
        const double slope = r > 1e-9 ? (gp - gm) / (2 * r) : (f(m + 1e-6) - f(m - 1e-6)) / 2e-6;
        const double avg = 0.5 * (gp + gm);
        if (a == b) return avg + (a == 0 ? 1.0 : -1.0) * slope * dz;
        return slope * (a == 0 ? o : std::conj(o));
    }
    BlochMatrix h(nb, nb);
    for (int x = 0; x < nb; ++x)
        for (int y = 0; y < nb; ++y) h(x, y) = rows.entry(x, y)[j];
    Eigen::SelfAdjointEigenSolver<BlochMatrix> es(h);
    cplx acc = 0;
    for (int nu = 0; nu < nb; ++nu)
        acc += f(es.eigenvalues()(nu)) * es.eigenvectors()(a, nu) * std::conj(es.eigenvectors()(b, nu));
    return acc;
}

struct ShellNode {
    double x;  // Delta - E
    double w;  // quadrature weight including log|x|
};

// tanh-sinh nodes on (0, eps] at step h, only odd multiples when fresh_only
std::vector<std::pair<double, double>> tanh_sinh(double eps, double h, bool fresh_only) {
    std::vector<std::pair<double, double>> out;
    const double tmax = 4.0;  // smallest node ~ eps e^{-85}; the log tail below it is negligible
    const int jmax = int(std::ceil(tmax / h));
    for (int j = -jmax; j <= jmax; ++j) {
        if (fresh_only && j % 2 == 0) continue;
        const double t = j * h;
        const double q = std::exp(-kPi * std::sinh(t));
        const double x = eps / (1 + q);            // eps * sigma
        const double s1 = q / (1 + q);             // 1 - sigma
        const double w = h * eps * kPi * std::cosh(t) * (1 / (1 + q)) * s1;
        if (x <= 0 || w == 0 || !std::isfinite(w)) continue;
        out.emplace_back(x, w);
    }
    return out;
}

struct ShellMoments {
    std::vector<lcplx> a, b;  // per separation
};

// Contour moments A(E) = oint [F div(v/v^2) + e^{ik.rho}(i v.rho P + v.grad P)/v^2] ds/v and B(E) = oint F ds/v
ShellMoments shell_moments(const ResonantSet& s, const std::vector<Separation>& seps) {
    ShellMoments m;
    m.a.assign(seps.size(), 0);
    m.b.assign(seps.size(), 0);
    const int nb = s.spec.bands();
    for (const auto& c : s.curves) {
        const std::vector<double> ds = line_elements(c);
        for (std::size_t j = 0; j < c.points.size(); ++j) {
            const auto& pt = c.points[j];
            const BandLocal L = band_local(s.spec, pt.k, s.band);
            const Vec2 v = L.d.v;
            const double v2 = v.squaredNorm();
            const double divw = L.d.hessian.trace() / v2 - 2 * v.dot(L.d.hessian * v) / (v2 * v2);
            const double w = ds[j] / std::sqrt(v2);
            for (std::size_t q = 0; q < seps.size(); ++q) {
                const auto& r = seps[q];
                const cplx P = nb == 1 ? cplx(1) : L.projector(r.i, r.ip);
                const cplx vdP = nb == 1 ? cplx(0) : v.x() * L.projector_grad[0](r.i, r.ip) + v.y() * L.projector_grad[1](r.i, r.ip);
                const cplx e = plane_wave(pt.k, r.rho);
                const cplx F = e * P;
                m.a[q] += lcplx(w * (F * divw + e * (I * v.dot(r.rho) * P + vdP) / v2));
                m.b[q] += lcplx(w * F);
            }
        }
    }
    return m;
}

}  // namespace

std::vector<OmegaResult> omega_exact(const LatticeSpec& spec, double delta, const std::vector<Separation>& seps,
                                     const OmegaOptions& opt) {
    spec.validate();
    if (!std::isfinite(delta)) throw Error(ErrorKind::Validation, "delta must be finite");
    std::vector<std::array<int, 2>> cells;
    for (const auto& r : seps) cells.push_back(cell_offset(spec, r));
    const int nb = spec.bands();

    // shell half-width: inside it no band has a Van Hove point or a touching
    double dist = 1e300;
    std::vector<int> resonant;
    std::vector<BandExtrema> ex;
    for (int nu = 0; nu < nb; ++nu) {
        ex.push_back(band_extrema(spec, nu));
        for (double e : ex.back().critical) dist = std::min(dist, std::abs(delta - e));
        for (double e : ex.back().degenerate) dist = std::min(dist, std::abs(delta - e));
        if (delta > ex.back().min && delta < ex.back().max) resonant.push_back(nu);
    }
    double eps = opt.shell > 0 ? opt.shell : std::min(opt.max_shell * spec.energy_unit, 0.5 * dist);
    if (dist < 1e-3 * spec.energy_unit) throw Error(ErrorKind::VanHove, "delta is within 1e-3 J of a singular energy");
    if (eps >= dist) throw Error(ErrorKind::Validation, "shell reaches a singular energy");

    std::vector<OmegaResult> out(seps.size());
    for (auto& o : out) o.shell = eps;

    // shell term: log-weighted energy integral of contour moments
    const double rmax = max_rho(seps);
    const double step = std::min(0.02, opt.phase_step / std::max(rmax, 1.0)) / spec.length_unit;
    std::vector<lcplx> shell(seps.size(), 0);
    std::vector<double> shell_err(seps.size(), 0);
    int nodes = 0;
    if (!resonant.empty()) {
        ExtractOptions eo;
        eo.max_step = step * spec.length_unit;
        std::vector<ResonantSet> base;
        for (int nu : resonant) base.push_back(extract(spec, nu, delta, eo));
        auto level_sum = [&](double h, bool fresh) {
            std::vector<lcplx> acc(seps.size(), 0);
            for (const auto& [x, w] : tanh_sinh(eps, h, fresh))
                for (int side : {-1, 1}) {
                    const double arg = side > 0 ? x : -x;  // Delta - E
                    const double phi = bump(arg, eps), dphi = bump_derivative(arg, eps);
                    if (phi < 1e-300 && std::abs(dphi) < 1e-300) continue;
                    for (const auto& b : base) {
                        const ResonantSet s = continue_to(b, delta - arg, step);
                        const ShellMoments m = shell_moments(s, seps);
                        ++nodes;
                        for (std::size_t q = 0; q < seps.size(); ++q)
                            acc[q] += (long double)(w * std::log(x)) * ((long double)phi * m.a[q] - (long double)dphi * m.b[q]);
                    }
                }
            return acc;
        };
        double h = std::ldexp(1.0, -opt.min_level);
        shell = level_sum(h, false);
        bool done = false;
        for (int level = opt.min_level + 1; level <= opt.max_level && !done; ++level) {
            h *= 0.5;
            const std::vector<lcplx> fresh = level_sum(h, true);
            done = true;
            for (std::size_t q = 0; q < seps.size(); ++q) {
                // weights carry h, so the refined sum halves the old one
                const lcplx next = 0.5L * shell[q] + fresh[q];
                shell_err[q] = double(std::abs(next - shell[q]));
                shell[q] = next;
                if (shell_err[q] > std::max(opt.abs_tol, opt.rel_tol * double(std::abs(next)))) done = false;
            }
        }
    }
    const double pref = spec.cell_area() / (kTwoPi * kTwoPi);

    // far term: smooth periodic remainder on a doubling grid
    auto g = [&](double e) {
        const double x = delta - e;
        if (std::abs(x) >= eps) return 1.0 / x;
        if (x == 0) return 0.0;
        const double x2 = x * x;
        return -std::expm1(x2 / (x2 - eps * eps)) / x;
    };
    auto far_sum = [&](int n) {
        GridRows rows(spec, n);
        std::vector<std::vector<cplx>> p1;
        for (const auto& c : cells) p1.push_back(phase_table(n, c[0]));
        std::vector<lcplx> acc(seps.size(), 0);
        std::vector<cplx> wrow(n);
        const auto& K = simd::kernels();
        for (int j2 = 0; j2 < n; ++j2) {
            rows.fill(j2);
            for (std::size_t q = 0; q < seps.size(); ++q) {
                if (q == 0 || seps[q].i != seps[q - 1].i || seps[q].ip != seps[q - 1].ip)
                    for (int j = 0; j < n; ++j) wrow[j] = matrix_function_element(rows, j, seps[q].i, seps[q].ip, nb, g);
                const cplx rowsum = K.dotu(wrow.data(), p1[q].data(), n);
                acc[q] += lcplx(rowsum * std::polar(1.0, kTwoPi * double((long(cells[q][1]) * j2) % n) / n));
            }
        }
        std::vector<cplx> res;
        for (auto& a : acc) res.push_back(cplx(a / ((long double)n * n)));
        return res;
    };
    int n = opt.min_grid;
    std::vector<cplx> far = far_sum(n);
    std::vector<double> ferr(seps.size(), 1e300);
    while (true) {
        const int n2 = 2 * n;
        if (n2 > opt.max_grid) break;
        const std::vector<cplx> next = far_sum(n2);
        bool ok = true;
        for (std::size_t q = 0; q < seps.size(); ++q) {
            ferr[q] = std::abs(next[q] - far[q]);
            if (ferr[q] > std::max(opt.abs_tol, opt.rel_tol * std::abs(next[q]))) ok = false;
        }
        far = next;
        n = n2;
        if (ok) break;
    }
    for (std::size_t q = 0; q < seps.size(); ++q) {
        out[q].value = cplx((long double)pref * shell[q] + lcplx(far[q]));
        out[q].error = pref * shell_err[q] + ferr[q];
        out[q].grid = n;
        out[q].energy_nodes = nodes;
        if (out[q].error > 1e-7 * std::max(std::abs(out[q].value), 1e-4))
            throw Error(ErrorKind::QuadratureNotConverged, "omega_exact: error estimate above tolerance");
    }
    return out;
}

OmegaResult omega_exact(const ResonantSet& set, const Separation& r, const OmegaOptions& opt) {
    return omega_exact(set.spec, set.delta, std::vector<Separation>{r}, opt).front();
}

namespace {

double max_speed(const LatticeSpec& spec) {
    double v = 0;
    const auto b = spec.reciprocal();
    for (int nu = 0; nu < spec.bands(); ++nu)
        for (int j = 0; j < 64; ++j)
            for (int i = 0; i < 64; ++i) {
                try {
                    v = std::max(v, derivatives(spec, (i / 64.0) * b[0] + (j / 64.0) * b[1], nu).v.norm());
                } catch (const Error&) {
                }
            }
    return 1.05 * v + 1e-3;
}

// polynomial extrapolation to eta = 0; returns value and the change from the previous order
std::pair<cplx, double> neville(const std::vector<double>& x, std::vector<cplx> y) {
    const std::size_t n = x.size();
    cplx prev = y.back();
    for (std::size_t m = 1; m < n; ++m) {
        for (std::size_t i = 0; i + m < n; ++i) y[i] = (x[i + m] * y[i] - x[i] * y[i + 1]) / (x[i + m] - x[i]);
        if (m == n - 2) prev = y[0];
    }
    return {y[0], std::abs(y[0] - prev)};
}

}  // namespace

BruteResult omega_brute(const LatticeSpec& spec, double delta, const Separation& r, const BruteOptions& opt) {
    spec.validate();
    if (opt.levels < 2 || !(opt.eta0 > 0)) throw Error(ErrorKind::Validation, "brute force needs at least two broadenings");
    const auto cell = cell_offset(spec, r);
    const int nb = spec.bands();
    if (nb > 2) throw Error(ErrorKind::Validation, "brute-force reference supports at most two sublattices");
    const double vmax = max_speed(spec);
    BruteResult res;
    std::vector<cplx> fwd, bwd;
    const auto& K = simd::kernels();
    for (int l = 0; l < opt.levels; ++l) {
        const double eta = opt.eta0 * std::ldexp(1.0, -l) * spec.energy_unit;
        int n = int(std::ceil(opt.resolution * vmax / eta));
        n = std::max(64, (n + 15) / 16 * 16);
        if (n > opt.max_grid) throw Error(ErrorKind::QuadratureNotConverged, "brute-force grid exceeds max_grid");
        GridRows rows(spec, n);
        const std::vector<cplx> p = phase_table(n, cell[0]);
        std::vector<cplx> pc(n);
        for (int j = 0; j < n; ++j) pc[j] = std::conj(p[j]);
        std::vector<double> w(n), d0(n), d1(n);
        std::vector<cplx> o(n);
        const cplx z(delta, eta);
        cplx gf = 0, gb = 0;
        for (int j2 = 0; j2 < n; ++j2) {
            rows.fill(j2);
            const cplx ph = std::polar(1.0, kTwoPi * double((long(cell[1]) * j2) % n) / n);
            if (nb == 1) {
                for (int j = 0; j < n; ++j) w[j] = rows.entry(0, 0)[j].real();
                gf += ph * K.resolvent1(z, w.data(), p.data(), n);
                gb += std::conj(ph) * K.resolvent1(z, w.data(), pc.data(), n);
            } else {
                for (int j = 0; j < n; ++j) {
                    d0[j] = rows.entry(0, 0)[j].real();
                    d1[j] = rows.entry(1, 1)[j].real();
                    o[j] = rows.entry(0, 1)[j];
                }
                gf += ph * K.resolvent2(z, d0.data(), d1.data(), o.data(), r.i, r.ip, p.data(), n);
                gb += std::conj(ph) * K.resolvent2(z, d0.data(), d1.data(), o.data(), r.ip, r.i, pc.data(), n);
            }
        }
        const double norm = 1.0 / (double(n) * n);
        res.etas.push_back(eta);
        fwd.push_back(gf * norm);
        bwd.push_back(gb * norm);
    }
    res.raw = fwd;
    const auto [g1, e1] = neville(res.etas, fwd);
    const auto [g2, e2] = neville(res.etas, bwd);
    res.g = g1;
    res.error = std::max(e1, e2);
    // Hermitian and anti-Hermitian parts of G in the pair (r, r')
    res.omega = 0.5 * (g1 + std::conj(g2));
    res.gamma = I * (g1 - std::conj(g2));
    return res;
}

double max_tube_width(const ResonantSet& set) {
    double k = 0;
    for (const auto& c : set.curves)
        for (const auto& p : c.points) k = std::max(k, std::abs(p.curvature));
    return k > 0 ? 0.9 / k : 1e300;
}

double default_tube_width(const ResonantSet& set) {
    const double m = max_tube_width(set);
    return m < 1e299 ? m * (0.5 / 0.9) : 1.0 / set.spec.length_unit;
}

cplx tube_approximant(const ResonantSet& in, const Separation& r, double eps) {
    check_sep(in.spec, r);
    if (eps <= 0) eps = default_tube_width(in);
    if (eps >= max_tube_width(in)) throw Error(ErrorKind::Validation, "tube width must stay below 0.9 / max|K|");
    const ResonantSet set = refine_for(in, r.rho.norm());
    cplx acc = 0;
    for (const auto& c : set.curves)
        for (const auto& s : samples(set, c, r.i, r.ip)) {
            const double y = eps * r.rho.dot(s.v) / s.v.norm();
            acc += (1.0 + theta(y)) * s.w * s.p * plane_wave(s.k, r.rho);
        }
    return -I * set.spec.cell_area() / (4 * kPi) * acc;
}

cplx stationary_phase(const ResonantSet& set, const Separation& r) {
    check_sep(set.spec, r);
    const double rho = r.rho.norm();
    if (rho == 0) throw Error(ErrorKind::Validation, "stationary phase needs a nonzero separation");
    const Vec2 dir = r.rho / rho;
    for (const auto& c : caustics(set))
        if (std::acos(std::clamp(c.direction.dot(dir), -1.0, 1.0)) < 1e-3)
            throw Error(ErrorKind::CausticDirection, "separation is within 1e-3 rad of a caustic direction");
    const auto pts = stationary_points(set, dir);
    if (pts.empty()) throw Error(ErrorKind::NoResonantDirection, "no point of S radiates along this direction");
    cplx acc = 0;
    for (const auto& p : pts) {
        const cplx P = set.spec.bands() > 1 ? band_local(set.spec, p.k, set.band).projector(r.i, r.ip) : cplx(1);
        const double sgn = p.curvature > 0 ? 1.0 : -1.0;
        acc += std::polar(1.0, sgn * kPi / 4 + p.k.dot(r.rho)) * P / (p.speed * std::sqrt(std::abs(p.curvature)));
    }
    return -I * set.spec.cell_area() * acc / std::sqrt(kTwoPi * rho);
}

SpinCoupling spin_coupling(const ResonantSet& set, const Separation& r, double g, const OmegaOptions& opt) {
    if (!std::isfinite(g)) throw Error(ErrorKind::Validation, "coupling must be finite");
    SpinCoupling out;
    const cplx om = omega_exact(set, r, opt).value;
    const cplx ga = gamma(set, r);
    out.g2_omega = g * g * om;
    out.g2_gamma = g * g * ga;
    out.g2_green = g * g * (om - 0.5 * I * ga);
    return out;
}

}  // namespace bathwave
