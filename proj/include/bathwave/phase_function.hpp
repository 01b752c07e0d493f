#pragma once

namespace bathwave {

// Normalised bump exp(x^2 / (x^2 - eps^2)) on |x| < eps, zero outside.
double bump(double x, double eps);
// d/dx of bump(x, eps)
double bump_derivative(double x, double eps);

// Smoothed sign function Theta(y) = (1/pi) int sin(y t) bump(t, 1) / t dt.
// Theta_{rho eps}(x) of the tube approximant is theta(rho * eps * x).
double theta(double y);
double theta_derivative(double y);
// Quadrature without the table, for validation.
double theta_direct(double y);

// Table range; beyond it theta is sign(y) to better than exp(-sqrt(2 * kThetaTableMax)).
constexpr double kThetaTableMax = 400.0;

struct PhaseFunctionTable {
    double rho = 0;
    double eps = 0;
    double operator()(double x) const { return theta(rho * eps * x); }
};

}  // namespace bathwave
