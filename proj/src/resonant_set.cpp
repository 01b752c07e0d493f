#include "bathwave/resonant_set.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

namespace bathwave {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

struct Tracer {
    const LatticeSpec& spec;
    int band;
    double delta;

    Vec2 flow(const Vec2& k) const {
        const Vec2 v = derivatives(spec, k, band).v;
        return Vec2(v.y(), -v.x()) / v.norm();
    }

    Vec2 project(Vec2 k) const {
        for (int it = 0; it < 3; ++it) {
            const auto d = derivatives(spec, k, band);
            const double r = d.omega - delta;
            k -= r * d.v / d.v.squaredNorm();
            if (std::abs(r) < 1e-15 * spec.energy_unit) break;
        }
        return k;
    }

    Vec2 rk4(Vec2 k, double h, int sub = 4) const {
        const double dh = h / sub;
        for (int i = 0; i < sub; ++i) {
            const Vec2 f1 = flow(k);
            const Vec2 f2 = flow(k + 0.5 * dh * f1);
            const Vec2 f3 = flow(k + 0.5 * dh * f2);
            const Vec2 f4 = flow(k + dh * f3);
            k += dh / 6 * (f1 + 2 * f2 + 2 * f3 + f4);
        }
        return project(k);
    }
};

CurvePoint make_point(const LatticeSpec& spec, int band, const Vec2& k, double s) {
    const auto d = derivatives(spec, k, band);
    CurvePoint p;
    p.k = k;
    p.v = d.v;
    p.speed = d.v.norm();
    const Vec2 t = p.tangent();
    p.inverse_mass = t.dot(d.hessian * t);
    p.curvature = -p.inverse_mass / p.speed;
    p.s = s;
    return p;
}

struct Chain {
    Vec2 start;
    std::array<int, 2> shift;
    double length;
};

// Marching squares on the periodic reduced grid; each chain is one component of S.
std::vector<Chain> marching_squares(const LatticeSpec& spec, int band, double delta, int n) {
    const auto b = spec.reciprocal();
    std::vector<double> f(std::size_t(n) * n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            f[i + std::size_t(n) * j] = band_energy(spec, (double(i) / n) * b[0] + (double(j) / n) * b[1], band) - delta;
    auto F = [&](int i, int j) { return f[((i % n + n) % n) + std::size_t(n) * ((j % n + n) % n)]; };
    auto hid = [&](int i, int j) { return 2 * (((i % n + n) % n) + n * ((j % n + n) % n)); };
    auto vid = [&](int i, int j) { return hid(i, j) + 1; };
    // reduced coordinate of the crossing on an edge, in [0, 1)
    auto edge_point = [&](int id) {
        const int cell = id / 2, i = cell % n, j = cell / n;
        if (id % 2 == 0) {
            const double f0 = F(i, j), f1 = F(i + 1, j);
            return Vec2((i + f0 / (f0 - f1)) / n, double(j) / n);
        }
        const double f0 = F(i, j), f1 = F(i, j + 1);
        return Vec2(double(i) / n, (j + f0 / (f0 - f1)) / n);
    };
    std::map<int, std::vector<int>> adj;
    auto link = [&](int a, int c) {
        adj[a].push_back(c);
        adj[c].push_back(a);
    };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const bool c0 = F(i, j) > 0, c1 = F(i + 1, j) > 0, c2 = F(i + 1, j + 1) > 0, c3 = F(i, j + 1) > 0;
            const int e0 = hid(i, j), e1 = vid(i + 1, j), e2 = hid(i, j + 1), e3 = vid(i, j);
            std::vector<int> cut;
            if (c0 != c1) cut.push_back(e0);
            if (c1 != c2) cut.push_back(e1);
            if (c3 != c2) cut.push_back(e2);
            if (c0 != c3) cut.push_back(e3);
            if (cut.size() == 2) {
                link(cut[0], cut[1]);
            } else if (cut.size() == 4) {
                const double centre = 0.25 * (F(i, j) + F(i + 1, j) + F(i + 1, j + 1) + F(i, j + 1));
                if ((centre > 0) == c0) {
                    link(e0, e1);
                    link(e2, e3);
                } else {
                    link(e0, e3);
                    link(e1, e2);
                }
            }
        }
    std::vector<Chain> out;
    std::map<int, bool> seen;
    for (const auto& [start, nb] : adj) {
        if (seen[start]) continue;
        Vec2 u = edge_point(start), u0 = u;
        Vec2 kprev = u.x() * b[0] + u.y() * b[1];
        double len = 0;
        int prev = -1, cur = start;
        while (true) {
            seen[cur] = true;
            const auto& nbs = adj[cur];
            int next = nbs[0];
            if (nbs.size() > 1 && (nbs[0] == prev)) next = nbs[1];
            if (prev == -1) next = nbs[0];
            prev = cur;
            cur = next;
            Vec2 w = edge_point(cur);
            w.x() += std::round(u.x() - w.x());
            w.y() += std::round(u.y() - w.y());
            const Vec2 kw = w.x() * b[0] + w.y() * b[1];
            len += (kw - kprev).norm();
            kprev = kw;
            u = w;
            if (cur == start) break;
        }
        const Vec2 d = u - u0;
        out.push_back({u0.x() * b[0] + u0.y() * b[1], {int(std::lround(d.x())), int(std::lround(d.y()))}, len});
    }
    return out;
}

// smallest 2^a 3^b 5^c >= n, a multiple of 8; downstream spectral sums use FFTs of this length
int fft_friendly(int n) {
    for (int m = std::max(8, n);; ++m) {
        if (m % 8) continue;
        int r = m;
        for (int p : {2, 3, 5})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

ResonantCurve trace(const LatticeSpec& spec, int band, double delta, const Vec2& kstart,
                    std::array<int, 2> shift, double length_guess, int min_points, double max_step) {
    const Tracer tr{spec, band, delta};
    const auto b = spec.reciprocal();
    const Vec2 k0 = tr.project(kstart);
    const Vec2 t0 = tr.flow(k0);
    // the flow fixes the direction in which an open curve advances
    if ((shift[0] * b[0] + shift[1] * b[1]).dot(t0) < 0) shift = {-shift[0], -shift[1]};
    const Vec2 G = shift[0] * b[0] + shift[1] * b[1];
    // locate the period by stepping until the section through k0 is crossed again
    double h = std::min(max_step, length_guess / 512);
    Vec2 k = k0;
    double s = 0;
    double L = -1;
    const double limit = 4 * length_guess + 20 * h;
    while (s < limit) {
        const Vec2 kn = tr.rk4(k, h, 2);
        const double d0 = (k - k0 - G).dot(t0), d1 = (kn - k0 - G).dot(t0);
        if (s > 0.25 * length_guess && d0 < 0 && d1 >= 0 && (kn - k0 - G).norm() < 4 * h) {
            double x = h * (-d0) / (d1 - d0);
            for (int it = 0; it < 4; ++it) {
                const Vec2 kx = tr.rk4(k, x, 4);
                const double g = (kx - k0 - G).dot(t0);
                x -= g / tr.flow(kx).dot(t0);
            }
            L = s + x;
            break;
        }
        k = kn;
        s += h;
    }
    if (L <= 0) throw Error(ErrorKind::Unstable, "resonant curve did not close");
    ResonantCurve c;
    int n = std::max(min_points, int(std::ceil(L / max_step)));
    n = fft_friendly(n);
    c.length = L;
    c.step = L / n;
    c.shift = shift;
    c.shift_k = G;
    c.closed = shift[0] == 0 && shift[1] == 0;
    c.points.reserve(n);
    k = k0;
    for (int i = 0; i < n; ++i) {
        c.points.push_back(make_point(spec, band, k, i * c.step));
        k = tr.rk4(k, c.step, 4);
    }
    if ((k - k0 - G).norm() > 1e-8 / spec.length_unit)
        throw Error(ErrorKind::Unstable, "resonant curve closure error too large");
    if (c.closed) {
        double area = 0;
        for (int i = 0; i < n; ++i) area += cross(c.points[i].k, c.points[(i + 1) % n].k);
        // traversal along (v_y, -v_x) runs clockwise when v points outward
        c.orientation = area < 0 ? 1 : -1;
    }
    return c;
}

}  // namespace

std::size_t ResonantSet::total_points() const {
    std::size_t n = 0;
    for (const auto& c : curves) n += c.points.size();
    return n;
}

double ResonantSet::total_length() const {
    double l = 0;
    for (const auto& c : curves) l += c.length;
    return l;
}

CurvePoint geometry_at(const LatticeSpec& spec, int band, const Vec2& k) { return make_point(spec, band, k, 0.0); }

ResonantSet extract(const LatticeSpec& spec, int band, double delta, const ExtractOptions& opt) {
    spec.validate();
    if (band < 0 || band >= spec.bands()) throw Error(ErrorKind::Validation, "band index out of range");
    if (opt.grid_n < 16) throw Error(ErrorKind::Validation, "grid_n must be at least 16");
    if (!std::isfinite(delta)) throw Error(ErrorKind::Validation, "delta must be finite");
    const BandExtrema ex = band_extrema(spec, band);
    for (double e : ex.critical)
        if (std::abs(delta - e) < 1e-3 * spec.energy_unit)
            throw Error(ErrorKind::VanHove, "delta is within 1e-3 J of a Van Hove energy");
    for (double e : ex.degenerate)
        if (std::abs(delta - e) < 1e-3 * spec.energy_unit)
            throw Error(ErrorKind::DegenerateBand, "delta is within 1e-3 J of a band touching");
    ResonantSet set;
    set.spec = spec;
    set.band = band;
    set.delta = delta;
    if (delta <= ex.min || delta >= ex.max) return set;
    const double max_step = opt.max_step / spec.length_unit;
    for (const Chain& ch : marching_squares(spec, band, delta, opt.grid_n))
        set.curves.push_back(trace(spec, band, delta, ch.start, ch.shift, ch.length, opt.min_points, max_step));
    return set;
}

ResonantSet refine_for(const ResonantSet& set, double rho_max) {
    // four samples per radian of phase keeps the trapezoid rule at rounding level
    const double want = 0.25 / std::max(rho_max, 1.0);
    bool ok = true;
    for (const auto& c : set.curves) ok = ok && c.step <= want * 1.0001;
    if (ok) return set;
    ResonantSet out = set;
    for (auto& c : out.curves) {
        if (c.step <= want * 1.0001) continue;
        c = trace(set.spec, set.band, set.delta, c.points[0].k, c.shift, c.length, int(c.points.size()), want);
    }
    return out;
}

ResonantSet continue_to(const ResonantSet& set, double delta, double max_step) {
    ResonantSet out;
    out.spec = set.spec;
    out.band = set.band;
    out.delta = delta;
    for (const auto& c : set.curves) {
        Vec2 k = c.points[0].k;
        for (int it = 0; it < 50; ++it) {
            const auto d = derivatives(set.spec, k, set.band);
            const double r = delta - d.omega;
            k += r * d.v / d.v.squaredNorm();
            if (std::abs(r) < 1e-14 * set.spec.energy_unit) break;
        }
        const int n = std::max(64, int(std::ceil(c.length / max_step)));
        out.curves.push_back(trace(set.spec, set.band, delta, k, c.shift, c.length, n, max_step));
    }
    return out;
}

CurvePoint point_at(const ResonantSet& set, std::size_t curve, double s) {
    const auto& c = set.curves.at(curve);
    const double wraps = std::floor(s / c.length);
    const double r = s - wraps * c.length;
    std::size_t i = std::min(c.points.size() - 1, std::size_t(r / c.step));
    double rem = r - i * c.step;
    if (rem > 0.5 * c.step && i + 1 < c.points.size()) {
        ++i;
        rem -= c.step;
    }
    const Tracer tr{set.spec, set.band, set.delta};
    Vec2 k = c.points[i].k;
    if (std::abs(rem) > 1e-15) k = tr.rk4(k, rem, 4);
    CurvePoint p = make_point(set.spec, set.band, k + wraps * c.shift_k, s);
    return p;
}

WindingResult winding(const ResonantSet& set, std::size_t curve) {
    const auto& c = set.curves.at(curve);
    double sum = 0;
    for (const auto& p : c.points) sum += p.inverse_mass / p.speed;
    WindingResult w;
    w.value = c.orientation * sum * c.step / kTwoPi;
    w.rounded = std::lround(w.value);
    w.residual = std::abs(w.value - double(w.rounded));
    return w;
}

WindingResult winding(const ResonantSet& set) {
    WindingResult w;
    for (std::size_t i = 0; i < set.curves.size(); ++i) w.value += winding(set, i).value;
    w.rounded = std::lround(w.value);
    w.residual = std::abs(w.value - double(w.rounded));
    return w;
}

namespace {

// Bisection on a sign change of g(s) between s0 and s1.
template <class G>
double bisect(G&& g, double s0, double s1, double g0) {
    for (int it = 0; it < 60 && s1 - s0 > 1e-15; ++it) {
        const double m = 0.5 * (s0 + s1);
        const double gm = g(m);
        if ((gm > 0) == (g0 > 0)) {
            s0 = m;
            g0 = gm;
        } else {
            s1 = m;
        }
    }
    return 0.5 * (s0 + s1);
}

}  // namespace

std::vector<Caustic> caustics(const ResonantSet& set) {
    std::vector<Caustic> out;
    for (std::size_t ci = 0; ci < set.curves.size(); ++ci) {
        const auto& c = set.curves[ci];
        const std::size_t n = c.points.size();
        double kmax = 0;
        for (const auto& p : c.points) kmax = std::max(kmax, std::abs(p.curvature));
        auto K = [&](double s) { return point_at(set, ci, s).curvature; };
        auto push = [&](double s, int order) {
            const CurvePoint p = point_at(set, ci, s);
            out.push_back({p.k, p.normal(), order, ci, s, p.curvature});
        };
        for (std::size_t i = 0; i < n; ++i) {
            const double k0 = c.points[i].curvature, k1 = c.points[(i + 1) % n].curvature;
            const double s0 = c.points[i].s, s1 = s0 + c.step;
            if ((k0 > 0) != (k1 > 0)) {
                push(bisect(K, s0, s1, k0), 1);
                continue;
            }
            const double km = c.points[(i + n - 1) % n].curvature;
            const double a = std::abs(k0);
            if (a <= std::abs(km) && a < std::abs(k1) && a < 1e-3 * kmax && (km > 0) == (k0 > 0)) {
                // golden-section search for a double zero of K
                double lo = s0 - c.step, hi = s1;
                const double gr = 0.5 * (std::sqrt(5.0) - 1);
                double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
                double f1 = std::abs(K(x1)), f2 = std::abs(K(x2));
                for (int it = 0; it < 80 && hi - lo > 1e-13; ++it) {
                    if (f1 < f2) {
                        hi = x2;
                        x2 = x1;
                        f2 = f1;
                        x1 = hi - gr * (hi - lo);
                        f1 = std::abs(K(x1));
                    } else {
                        lo = x1;
                        x1 = x2;
                        f1 = f2;
                        x2 = lo + gr * (hi - lo);
                        f2 = std::abs(K(x2));
                    }
                }
                const double sm = 0.5 * (lo + hi);
                if (std::abs(K(sm)) < 1e-7 * set.spec.length_unit) push(sm, 2);
            }
        }
    }
    return out;
}

std::vector<CurvePoint> stationary_points(const ResonantSet& set, const Vec2& dir) {
    const Vec2 q = dir.normalized();
    std::vector<CurvePoint> out;
    for (std::size_t ci = 0; ci < set.curves.size(); ++ci) {
        const auto& c = set.curves[ci];
        const std::size_t n = c.points.size();
        auto g = [&](double s) { return cross(point_at(set, ci, s).normal(), q); };
        for (std::size_t i = 0; i < n; ++i) {
            const auto& p0 = c.points[i];
            const auto& p1 = c.points[(i + 1) % n];
            const double g0 = cross(p0.normal(), q), g1 = cross(p1.normal(), q);
            if ((g0 > 0) == (g1 > 0) || g0 == g1) continue;
            if (p0.normal().dot(q) <= 0 && p1.normal().dot(q) <= 0) continue;
            const double s = bisect(g, p0.s, p0.s + c.step, g0);
            const CurvePoint p = point_at(set, ci, s);
            if (p.normal().dot(q) > 0) out.push_back(p);
        }
    }
    return out;
}

CrossSection directional_cross_section(const ResonantSet& set, const Vec2& dir) {
    CrossSection cs;
    const Vec2 q = dir.normalized();
    for (const auto& c : caustics(set))
        if (std::acos(std::clamp(c.direction.dot(q), -1.0, 1.0)) < 1e-3) cs.diverges_at_caustic = true;
    cs.points = stationary_points(set, q);
    const double pref = set.spec.cell_area() / (kTwoPi * kTwoPi);
    for (const auto& p : cs.points) cs.sigma += pref / (p.speed * std::abs(p.curvature));
    return cs;
}

std::string to_csv(const ResonantSet& set) {
    std::ostringstream os;
    os.precision(17);
    os << "curve_id,s,k_x,k_y,v_x,v_y,K,mT\n";
    for (std::size_t ci = 0; ci < set.curves.size(); ++ci)
        for (const auto& p : set.curves[ci].points)
            os << ci << ',' << p.s << ',' << p.k.x() << ',' << p.k.y() << ',' << p.v.x() << ',' << p.v.y() << ','
               << p.curvature << ',' << p.transverse_mass() << '\n';
    return os.str();
}

}  // namespace bathwave
