#include "bathwave/phase_function.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "bathwave/simd/kernels.hpp"

namespace bathwave {

double bump(double x, double eps) {
    const double x2 = x * x, e2 = eps * eps;
    if (x2 >= e2) return 0.0;
    return std::exp(x2 / (x2 - e2));
}

double bump_derivative(double x, double eps) {
    const double x2 = x * x, e2 = eps * eps;
    if (x2 >= e2) return 0.0;
    const double d = x2 - e2;
    return std::exp(x2 / d) * (-2.0 * x * e2 / (d * d));
}

namespace {

constexpr double kStep = 0.01;

struct Table {
    std::vector<double> value, slope;

    Table() {
        // fixed composite Gauss-Legendre nodes on [0, 1]; fine enough for y <= kThetaTableMax
        constexpr int panels = 160;
        using GL = boost::math::quadrature::gauss<double, 20>;
        std::vector<double> u, ws, wc;
        for (int p = 0; p < panels; ++p) {
            const double a = double(p) / panels, h = 1.0 / panels;
            const auto& x = GL::abscissa();
            const auto& w = GL::weights();
            for (std::size_t i = 0; i < x.size(); ++i)
                for (int s : {-1, 1}) {
                    if (x[i] == 0 && s < 0) continue;
                    const double t = a + 0.5 * h * (1 + s * x[i]);
                    const double wt = 0.5 * h * w[i] * (2 / std::numbers::pi);
                    u.push_back(t);
                    wc.push_back(wt * bump(t, 1.0));
                    ws.push_back(wt * bump(t, 1.0) / t);
                }
        }
        const std::size_t n = u.size();
        const int m = static_cast<int>(kThetaTableMax / kStep) + 1;
        value.resize(m);
        slope.resize(m);
        std::vector<std::complex<double>> z(n, 1.0), rot(n);
        for (std::size_t i = 0; i < n; ++i) rot[i] = std::polar(1.0, kStep * u[i]);
        const auto& K = simd::kernels();
        for (int j = 0; j < m; ++j) {
            if (j % 256 == 0)
                for (std::size_t i = 0; i < n; ++i) z[i] = std::polar(1.0, j * kStep * u[i]);
            const auto s = K.wdot(ws.data(), z.data(), n);
            const auto c = K.wdot(wc.data(), z.data(), n);
            value[j] = s.imag();
            slope[j] = c.real();
            for (std::size_t i = 0; i < n; ++i) z[i] *= rot[i];
        }
    }
};

const Table& table() {
    static const Table t;
    return t;
}

}  // namespace

double theta(double y) {
    const double a = std::abs(y), sgn = y < 0 ? -1.0 : 1.0;
    if (a >= kThetaTableMax) return sgn;
    const auto& T = table();
    const std::size_t j = static_cast<std::size_t>(a / kStep);
    const double t = a / kStep - double(j);
    const double h00 = (1 + 2 * t) * (1 - t) * (1 - t), h10 = t * (1 - t) * (1 - t);
    const double h01 = t * t * (3 - 2 * t), h11 = t * t * (t - 1);
    return sgn * (h00 * T.value[j] + h10 * kStep * T.slope[j] + h01 * T.value[j + 1] + h11 * kStep * T.slope[j + 1]);
}

double theta_derivative(double y) {
    const double a = std::abs(y);
    if (a >= kThetaTableMax) return 0.0;
    const auto& T = table();
    const std::size_t j = static_cast<std::size_t>(a / kStep);
    const double t = a / kStep - double(j);
    return (1 - t) * T.slope[j] + t * T.slope[j + 1];
}

double theta_direct(double y) {
    auto f = [y](double t) { return t == 0 ? y : std::sin(y * t) * bump(t, 1.0) / t; };
    const int panels = 8 + static_cast<int>(std::abs(y));
    double s = 0;
    for (int p = 0; p < panels; ++p)
        s += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, double(p) / panels,
                                                                             double(p + 1) / panels, 5, 1e-15);
    return 2 / std::numbers::pi * s;
}

}  // namespace bathwave
