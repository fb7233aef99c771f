#pragma once

#include <cmath>
#include <vector>

#include "sf/error.hpp"

namespace sf {

// Ricker wavelet with peak amplitude 1, delayed by 1/f0 so the trace starts
// near zero. Time in ms pairs with f0 in 1/ms (10 Hz = 0.01).
inline double ricker_value(double f0, double t) {
    double tau = t - 1.0 / f0;
    double a = M_PI * M_PI * f0 * f0 * tau * tau;
    return (1.0 - 2.0 * a) * std::exp(-a);
}

inline std::vector<double> ricker(double f0, double t0, double dt, long nt) {
    if (!(f0 > 0.0)) throw ParameterError("ricker: f0 must be positive");
    if (nt < 1 || !(dt > 0.0)) throw ParameterError("ricker: bad time axis");
    std::vector<double> w(nt);
    for (long i = 0; i < nt; ++i) w[i] = ricker_value(f0, t0 + i * dt);
    return w;
}

// 4th derivative of a Gaussian, peak amplitude 1 at t = 2/fp, spectral peak at
// fp. Narrower relative bandwidth than a Ricker of equal duration, so high
// space orders stay in the asymptotic dispersion regime.
inline double dgauss4_value(double fp, double t) {
    double a = 2.0 * M_PI * fp;
    a = a * a / 8.0;
    double tau = t - 2.0 / fp;
    double x2 = a * tau * tau;
    return (16.0 * x2 * x2 - 48.0 * x2 + 12.0) * std::exp(-x2) / 12.0;
}

} // namespace sf
