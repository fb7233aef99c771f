#pragma once

#include <vector>

#include "sf/model.hpp"

namespace sf {

// Frequency-domain reference solution for a constant-velocity 2-D medium:
// each receiver trace is IFT[ -i*pi*H0^(2)(w r / c) * q(w) ] on the source
// time axis, H0^(2) = J0 - i*Y0. The kernel is the response to a unit point
// source 4*pi times stronger than the discrete unit-node injection, so
// numerical comparisons scale the injected source by 4*pi/(hx*hy).
// The FFT window is zero-padded (pad_factor >= 2) against wrap-around of the
// long 2-D wake.
std::vector<double> analytic_2d(const SeismicModel& model,
                                const std::vector<double>& src_trace, double dt,
                                const std::vector<double>& src_xy,
                                const std::vector<double>& rec_xy,
                                long pad_factor = 8);

} // namespace sf
