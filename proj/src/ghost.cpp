#include "bathwave/ghost.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bathwave {

LatticeDirection lattice_direction(const LatticeSpec& spec, double theta, double tol, int max_index) {
    LatticeDirection best;
    double best_len = 1e300;
    for (int p = -max_index; p <= max_index; ++p)
        for (int q = -max_index; q <= max_index; ++q) {
            if (std::gcd(std::abs(p), std::abs(q)) != 1) continue;
            const Vec2 v = p * spec.a[0] + q * spec.a[1];
            const double th = std::atan2(v.y(), v.x());
            const double d = std::abs(std::remainder(th - theta, 2 * M_PI));
            if (d <= tol && v.norm() < best_len) {
                best_len = v.norm();
                best = {{p, q}, v, th};
            }
        }
    if (best_len == 1e300) throw Error(ErrorKind::Validation, "no lattice direction within tolerance");
    return best;
}

namespace {

double envelope(const ResonantSet& set, const Vec2& rho) {
    double m = 0;
    for (cplx c : gamma_by_curve(set, {rho, 0, 0})) m = std::max(m, std::abs(c));
    return m;
}

}  // namespace

DecayFit ghost_decay(const ResonantSet& set, const LatticeDirection& dir, const GhostOptions& opt) {
    if (set.spec.bands() != 1) throw Error(ErrorKind::Validation, "ghost scans are implemented for one-band lattices");
    if (set.empty()) throw Error(ErrorKind::NoResonantDirection, "empty resonant set");
    const Vec2 hat = dir.vector.normalized();
    if (!stationary_points(set, hat).empty())
        throw Error(ErrorKind::Validation, "direction has a real stationary point; not in the ghost regime");
    const double step = dir.vector.norm();
    auto logenv = [&](long m) { return std::log(envelope(set, double(m) * dir.vector) * std::sqrt(m * step)); };

    // coarse decay rate from doubling separations
    long m1 = std::max(1L, long(std::ceil(opt.rho_start / step)));
    double l1 = logenv(m1), kappa = 0;
    while (true) {
        const long m2 = 2 * m1;
        if (m2 * step > opt.rho_cap) break;
        const double l2 = logenv(m2);
        kappa = (l1 - l2) / ((m2 - m1) * step);
        if (kappa > 0 && kappa * m2 * step >= opt.kappa_rho_min) break;
        m1 = m2;
        l1 = l2;
    }
    if (!(kappa > 0)) throw Error(ErrorKind::FitUnreliable, "no decay detected within rho_cap");

    // refine once: the coarse estimate is taken partly in the transition region
    DecayFit fit;
    fit.direction = dir;
    for (int pass = 0; pass < 2; ++pass) {
        double lo = opt.kappa_rho_min / kappa, hi = opt.kappa_rho_max / kappa;
        hi = std::min(hi, opt.rho_cap);
        // keep the tail above the summation floor
        const double limit = -std::log(opt.floor) / kappa;
        hi = std::min(hi, std::max(limit, lo * 1.5));
        long a = std::max(1L, long(std::ceil(lo / step))), b = std::max(a + 2, long(std::floor(hi / step)));
        fit.rho.clear();
        fit.log_envelope.clear();
        const int n = std::min<long>(opt.samples, b - a + 1);
        for (int j = 0; j < n; ++j) {
            const long m = a + std::lround(double(b - a) * j / std::max(1, n - 1));
            if (!fit.rho.empty() && m * step <= fit.rho.back()) continue;
            fit.rho.push_back(m * step);
            fit.log_envelope.push_back(logenv(m));
        }
        const LinearFit lf = linear_fit(fit.rho, fit.log_envelope);
        kappa = -lf.slope;
        fit.kappa = kappa;
        fit.r2 = lf.r2;
        if (!(kappa > 0)) throw Error(ErrorKind::FitUnreliable, "envelope does not decay");
    }
    return fit;
}

double GhostScan::kappa_model(double dtheta) const { return prefactor * std::pow(dtheta, exponent); }

GhostScan ghost_scan(const ResonantSet& set, double theta_c, const std::vector<double>& thetas, const GhostOptions& opt) {
    GhostScan out;
    out.theta_c = theta_c;
    std::vector<double> dth, kap;
    for (double th : thetas) {
        const double d = std::abs(th - theta_c);
        if (d <= 0) throw Error(ErrorKind::Validation, "scan angle coincides with the caustic");
        const LatticeDirection dir = lattice_direction(set.spec, th, opt.angle_tol * d);
        DecayFit f = ghost_decay(set, dir, opt);
        if (f.r2 < 0.98) throw Error(ErrorKind::FitUnreliable, "decay fit R^2 below 0.98");
        out.dtheta.push_back(std::abs(dir.theta - theta_c));
        out.fits.push_back(std::move(f));
    }
    for (const auto& f : out.fits) kap.push_back(f.kappa);
    const LinearFit pf = power_fit(out.dtheta, kap);
    out.exponent = pf.slope;
    out.prefactor = std::exp(pf.intercept);
    out.r2 = pf.r2;
    if (out.fits.size() >= 3 && pf.r2 < 0.98) throw Error(ErrorKind::FitUnreliable, "power-law fit R^2 below 0.98");
    return out;
}

}  // namespace bathwave
