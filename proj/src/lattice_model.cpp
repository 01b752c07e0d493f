#include "bathwave/lattice_model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>

namespace bathwave {

const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Validation: return "validation";
        case ErrorKind::DegenerateBand: return "degenerate-band";
        case ErrorKind::VanHove: return "van-hove";
        case ErrorKind::QuadratureNotConverged: return "quadrature-not-converged";
        case ErrorKind::CausticDirection: return "caustic-direction";
        case ErrorKind::NoResonantDirection: return "no-resonant-direction";
        case ErrorKind::Unstable: return "unstable";
        case ErrorKind::FitUnreliable: return "fit-unreliable";
        case ErrorKind::ClosedOrbit: return "closed-orbit";
        case ErrorKind::EnergyDrift: return "energy-drift";
        case ErrorKind::NormDrift: return "norm-drift";
        case ErrorKind::EmptySlice: return "empty-slice";
    }
    return "unknown";
}

namespace {
constexpr double kTwoPi = 2 * std::numbers::pi;
const cplx I{0.0, 1.0};

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

using Eigs = Eigen::SelfAdjointEigenSolver<BlochMatrix>;
}  // namespace

double LatticeSpec::cell_area() const { return std::abs(cross(a[0], a[1])); }

std::array<Vec2, 2> LatticeSpec::reciprocal() const {
    const double c = cross(a[0], a[1]);
    return {Vec2(a[1].y(), -a[1].x()) * (kTwoPi / c), Vec2(-a[0].y(), a[0].x()) * (kTwoPi / c)};
}

Vec2 LatticeSpec::hop_vector(const Coupling& c) const {
    return cell_vector(c.cell[0], c.cell[1]) + sublattices[c.to].position - sublattices[c.from].position;
}

void LatticeSpec::validate() const {
    if (sublattices.empty() || bands() > kMaxBands)
        throw Error(ErrorKind::Validation, "sublattice count must be in [1, " + std::to_string(kMaxBands) + "]");
    if (cell_area() < 1e-12) throw Error(ErrorKind::Validation, "lattice vectors are degenerate");
    for (const auto& c : couplings) {
        if (c.from < 0 || c.to < 0 || c.from >= bands() || c.to >= bands())
            throw Error(ErrorKind::Validation, "coupling references unknown sublattice");
        bool partner = false;
        for (const auto& d : couplings) {
            if (d.from == c.to && d.to == c.from && d.cell[0] == -c.cell[0] && d.cell[1] == -c.cell[1] &&
                std::abs(d.amplitude - std::conj(c.amplitude)) < 1e-12) {
                partner = true;
                break;
            }
        }
        if (!partner) throw Error(ErrorKind::Validation, "coupling list is not hermitian");
    }
}

LatticeSpec build_square(double jx, double jy, double a) {
    if (!(a > 0)) throw Error(ErrorKind::Validation, "lattice constant must be positive");
    LatticeSpec s;
    s.a = {Vec2(a, 0), Vec2(0, a)};
    s.length_unit = a;
    s.sublattices = {{"A", Vec2::Zero()}};
    for (int sgn : {1, -1}) {
        s.couplings.push_back({0, 0, {sgn, 0}, jx});
        s.couplings.push_back({0, 0, {0, sgn}, jy});
    }
    return s;
}

LatticeSpec build_honeycomb(double j1, double j2, double a) {
    if (!(a > 0)) throw Error(ErrorKind::Validation, "lattice constant must be positive");
    LatticeSpec s;
    const double r3 = std::sqrt(3.0);
    s.a = {Vec2(1.5 * a, 0.5 * r3 * a), Vec2(1.5 * a, -0.5 * r3 * a)};
    s.length_unit = a;
    s.sublattices = {{"A", Vec2::Zero()}, {"B", Vec2(a, 0)}};
    const std::array<std::array<int, 2>, 3> nn{{{0, 0}, {-1, 0}, {0, -1}}};
    for (const auto& c : nn) {
        s.couplings.push_back({0, 1, c, j1});
        s.couplings.push_back({1, 0, {-c[0], -c[1]}, j1});
    }
    if (j2 != 0.0) {
        for (int sub : {0, 1})
            for (int sgn : {1, -1}) {
                s.couplings.push_back({sub, sub, {sgn, 0}, j2});
                s.couplings.push_back({sub, sub, {0, sgn}, j2});
            }
    }
    return s;
}

BlochMatrix bloch_hamiltonian(const LatticeSpec& spec, const Vec2& k) {
    const int n = spec.bands();
    BlochMatrix h = BlochMatrix::Zero(n, n);
    for (const auto& c : spec.couplings) h(c.from, c.to) += c.amplitude * std::exp(I * k.dot(spec.hop_vector(c)));
    return h;
}

BlochSample bloch(const LatticeSpec& spec, const Vec2& k) {
    BlochSample out;
    const BlochMatrix h = bloch_hamiltonian(spec, k);
    if (spec.bands() == 1) {
        out.energies = {h(0, 0).real()};
        out.vectors = BlochMatrix::Ones(1, 1);
        return out;
    }
    Eigs es(h);
    out.energies.assign(es.eigenvalues().data(), es.eigenvalues().data() + spec.bands());
    out.vectors = es.eigenvectors();
    return out;
}

double band_energy(const LatticeSpec& spec, const Vec2& k, int band) {
    const BlochMatrix h = bloch_hamiltonian(spec, k);
    if (spec.bands() == 1) return h(0, 0).real();
    if (spec.bands() == 2) {
        const double m = 0.5 * (h(0, 0).real() + h(1, 1).real());
        const double d = 0.5 * (h(0, 0).real() - h(1, 1).real());
        const double r = std::sqrt(d * d + std::norm(h(0, 1)));
        return band == 0 ? m - r : m + r;
    }
    Eigs es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(band);
}

namespace {

struct HamDerivs {
    BlochMatrix h;
    std::array<BlochMatrix, 2> d1;
    std::array<std::array<BlochMatrix, 2>, 2> d2;
};

HamDerivs ham_derivs(const LatticeSpec& spec, const Vec2& k) {
    const int n = spec.bands();
    HamDerivs o;
    o.h = BlochMatrix::Zero(n, n);
    for (auto& m : o.d1) m = BlochMatrix::Zero(n, n);
    for (auto& r : o.d2)
        for (auto& m : r) m = BlochMatrix::Zero(n, n);
    for (const auto& c : spec.couplings) {
        const Vec2 d = spec.hop_vector(c);
        const cplx t = c.amplitude * std::exp(I * k.dot(d));
        o.h(c.from, c.to) += t;
        for (int a = 0; a < 2; ++a) {
            o.d1[a](c.from, c.to) += I * d[a] * t;
            for (int b = 0; b < 2; ++b) o.d2[a][b](c.from, c.to) -= d[a] * d[b] * t;
        }
    }
    return o;
}

void check_band(const LatticeSpec& spec, int band) {
    if (band < 0 || band >= spec.bands()) throw Error(ErrorKind::Validation, "band index out of range");
}

}  // namespace

BandLocal band_local(const LatticeSpec& spec, const Vec2& k, int band) {
    check_band(spec, band);
    const int n = spec.bands();
    const HamDerivs hd = ham_derivs(spec, k);
    BandLocal out;
    if (n == 1) {
        out.d.omega = hd.h(0, 0).real();
        for (int a = 0; a < 2; ++a) {
            out.d.v[a] = hd.d1[a](0, 0).real();
            for (int b = 0; b < 2; ++b) out.d.hessian(a, b) = hd.d2[a][b](0, 0).real();
        }
        out.projector = BlochMatrix::Ones(1, 1);
        out.projector_grad = {BlochMatrix::Zero(1, 1), BlochMatrix::Zero(1, 1)};
        return out;
    }
    Eigs es(hd.h);
    const auto& w = es.eigenvalues();
    const auto& U = es.eigenvectors();
    for (int mu = 0; mu < n; ++mu)
        if (mu != band && std::abs(w(mu) - w(band)) < kDegenerateGap * spec.energy_unit)
            throw Error(ErrorKind::DegenerateBand, "band touches a neighbour at this k");
    const auto u = U.col(band);
    out.d.omega = w(band);
    std::array<Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxBands, 1>, 2> hu;
    for (int a = 0; a < 2; ++a) {
        hu[a] = hd.d1[a] * u;
        out.d.v[a] = u.dot(hu[a]).real();  // Eigen dot conjugates the first argument
    }
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            double hab = u.dot(hd.d2[a][b] * u).real();
            for (int mu = 0; mu < n; ++mu) {
                if (mu == band) continue;
                const auto um = U.col(mu);
                hab += 2.0 * (std::conj(um.dot(hu[a])) * um.dot(hu[b])).real() / (w(band) - w(mu));
            }
            out.d.hessian(a, b) = hab;
        }
    out.projector = u * u.adjoint();
    for (int a = 0; a < 2; ++a) {
        BlochMatrix g = BlochMatrix::Zero(n, n);
        for (int mu = 0; mu < n; ++mu) {
            if (mu == band) continue;
            const BlochMatrix Pm = U.col(mu) * U.col(mu).adjoint();
            g += (Pm * hd.d1[a] * out.projector + out.projector * hd.d1[a] * Pm) / (w(band) - w(mu));
        }
        out.projector_grad[a] = g;
    }
    return out;
}

DispersionDerivatives derivatives(const LatticeSpec& spec, const Vec2& k, int band) {
    return band_local(spec, k, band).d;
}

namespace {

double min_gap(const LatticeSpec& spec, const Vec2& k, int band) {
    const BlochSample s = bloch(spec, k);
    double g = 1e300;
    if (band > 0) g = std::min(g, s.energies[band] - s.energies[band - 1]);
    if (band + 1 < spec.bands()) g = std::min(g, s.energies[band + 1] - s.energies[band]);
    return g;
}

Vec2 reduced_to_k(const LatticeSpec& spec, double u1, double u2) {
    const auto b = spec.reciprocal();
    return u1 * b[0] + u2 * b[1];
}

void push_unique(std::vector<double>& v, double x, double tol) {
    for (double y : v)
        if (std::abs(x - y) < tol) return;
    v.push_back(x);
}

}  // namespace

BandExtrema band_extrema(const LatticeSpec& spec, int band) {
    check_band(spec, band);
    constexpr int n = 64;
    std::vector<double> g2(n * n), en(n * n), gap(n * n);
    BandExtrema out;
    out.min = 1e300;
    out.max = -1e300;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const Vec2 k = reduced_to_k(spec, double(i) / n, double(j) / n);
            const BlochSample s = bloch(spec, k);
            en[i + n * j] = s.energies[band];
            gap[i + n * j] = spec.bands() > 1 ? min_gap(spec, k, band) : 1e300;
            try {
                g2[i + n * j] = derivatives(spec, k, band).v.squaredNorm();
            } catch (const Error&) {
                g2[i + n * j] = 0;
            }
            out.min = std::min(out.min, en[i + n * j]);
            out.max = std::max(out.max, en[i + n * j]);
        }
    auto local_min = [&](const std::vector<double>& f, int i, int j) {
        const double c = f[i + n * j];
        for (int dj = -1; dj <= 1; ++dj)
            for (int di = -1; di <= 1; ++di) {
                if (!di && !dj) continue;
                if (f[(i + di + n) % n + n * ((j + dj + n) % n)] < c) return false;
            }
        return true;
    };
    const double tolE = 1e-9 * spec.energy_unit;
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            if (!local_min(g2, i, j)) continue;
            Vec2 k = reduced_to_k(spec, double(i) / n, double(j) / n);
            bool ok = false;
            try {
                for (int it = 0; it < 60; ++it) {
                    const auto d = derivatives(spec, k, band);
                    if (d.v.norm() < 1e-12 * spec.energy_unit * spec.length_unit) {
                        ok = true;
                        break;
                    }
                    const Eigen::Matrix2d H = d.hessian;
                    if (std::abs(H.determinant()) < 1e-14) break;
                    Vec2 step = H.inverse() * d.v;
                    const double cap = 0.5 / spec.length_unit;
                    if (step.norm() > cap) step *= cap / step.norm();
                    k -= step;
                }
            } catch (const Error&) {
                ok = false;
            }
            if (ok) {
                const double e = band_energy(spec, k, band);
                push_unique(out.critical, e, tolE);
                out.min = std::min(out.min, e);
                out.max = std::max(out.max, e);
            }
        }
    if (spec.bands() > 1) {
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                if (!local_min(gap, i, j)) continue;
                // compass search on the gap; conical touching points converge linearly
                Vec2 k = reduced_to_k(spec, double(i) / n, double(j) / n);
                double best = min_gap(spec, k, band);
                double step = 0.5 * kTwoPi / (n * spec.length_unit);
                while (step > 1e-13 && best > 1e-12) {
                    bool moved = false;
                    for (const Vec2& d : {Vec2(1, 0), Vec2(-1, 0), Vec2(0, 1), Vec2(0, -1)}) {
                        const double g = min_gap(spec, k + step * d, band);
                        if (g < best) {
                            best = g;
                            k += step * d;
                            moved = true;
                            break;
                        }
                    }
                    if (!moved) step *= 0.5;
                }
                if (best < 1e-6 * spec.energy_unit) push_unique(out.degenerate, band_energy(spec, k, band), 1e-6);
            }
    }
    std::sort(out.critical.begin(), out.critical.end());
    std::sort(out.degenerate.begin(), out.degenerate.end());
    return out;
}

double singular_distance(const LatticeSpec& spec, int band, double delta) {
    const BandExtrema ex = band_extrema(spec, band);
    double d = 1e300;
    for (double e : ex.critical) d = std::min(d, std::abs(delta - e));
    for (double e : ex.degenerate) d = std::min(d, std::abs(delta - e));
    return d;
}

std::string to_json(const LatticeSpec& spec) {
    nlohmann::json j;
    j["dimension"] = 2;
    j["lattice_vectors"] = {{spec.a[0].x(), spec.a[0].y()}, {spec.a[1].x(), spec.a[1].y()}};
    j["length_unit"] = spec.length_unit;
    j["energy_unit"] = spec.energy_unit;
    for (const auto& s : spec.sublattices)
        j["sublattices"].push_back({{"name", s.name}, {"position", {s.position.x(), s.position.y()}}});
    j["couplings"] = nlohmann::json::array();
    for (const auto& c : spec.couplings)
        j["couplings"].push_back({{"from", c.from},
                                  {"to", c.to},
                                  {"cell", {c.cell[0], c.cell[1]}},
                                  {"amplitude", {c.amplitude.real(), c.amplitude.imag()}}});
    return j.dump(2);
}

LatticeSpec lattice_from_json(const std::string& text) {
    LatticeSpec s;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.value("dimension", 2) != 2) throw Error(ErrorKind::Validation, "only dimension 2 is supported");
        const auto& lv = j.at("lattice_vectors");
        s.a = {Vec2(lv.at(0).at(0), lv.at(0).at(1)), Vec2(lv.at(1).at(0), lv.at(1).at(1))};
        s.length_unit = j.value("length_unit", 1.0);
        s.energy_unit = j.value("energy_unit", 1.0);
        for (const auto& sj : j.at("sublattices"))
            s.sublattices.push_back({sj.value("name", std::string("A")),
                                     Vec2(sj.at("position").at(0), sj.at("position").at(1))});
        for (const auto& cj : j.at("couplings")) {
            Coupling c;
            c.from = cj.at("from");
            c.to = cj.at("to");
            c.cell = {cj.at("cell").at(0).get<int>(), cj.at("cell").at(1).get<int>()};
            const auto& amp = cj.at("amplitude");
            c.amplitude = amp.is_array() ? cplx(amp.at(0).get<double>(), amp.at(1).get<double>())
                                         : cplx(amp.get<double>(), 0.0);
            s.couplings.push_back(c);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Validation, std::string("lattice json: ") + e.what());
    }
    s.validate();
    return s;
}

}  // namespace bathwave
