#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "sf/error.hpp"

namespace sf {

// Least-squares line through (log x, log y). x must be strictly monotone and
// positive; y must be positive (errors being fitted are norms).
struct SlopeFit {
    std::vector<double> log_x, log_y;
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;
};

inline SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ParameterError("fit_loglog: size mismatch");
    if (x.size() < 3) throw ParameterError("fit_loglog: need at least 3 points");
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0))
            throw ParameterError("fit_loglog: values must be positive");
        if (i > 0 && !((x[i] > x[i - 1]) == (x[1] > x[0]) && x[i] != x[i - 1]))
            throw ParameterError("fit_loglog: x must be strictly monotone");
    }
    SlopeFit f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        f.log_x.push_back(lx);
        f.log_y.push_back(ly);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    f.intercept = (sy - f.slope * sx) / n;
    double ss = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = f.log_y[i] - (f.slope * f.log_x[i] + f.intercept);
        ss += d * d;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

} // namespace sf
