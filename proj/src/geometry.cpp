#include "sf/geometry.hpp"

#include <cmath>

#include "sf/error.hpp"
#include "sf/wavelet.hpp"

namespace sf {

AcquisitionGeometry::AcquisitionGeometry(const SeismicModel& model,
                                         std::vector<double> src_coords,
                                         std::vector<double> rec_coords, double t0,
                                         double tn, double dt, double f0)
    : t0_(t0), tn_(tn), dt_(dt), f0_(f0) {
    if (!(dt > 0.0) || !(tn > t0))
        throw ParameterError("AcquisitionGeometry: bad time axis");
    if (dt > model.critical_dt() * (1.0 + 1e-12))
        throw StabilityError("AcquisitionGeometry: dt exceeds the stable limit " +
                             std::to_string(model.critical_dt()));
    const size_t rank = model.grid()->shape().size();
    if (src_coords.empty() || src_coords.size() % rank != 0 ||
        rec_coords.empty() || rec_coords.size() % rank != 0)
        throw ParameterError("AcquisitionGeometry: coordinate list rank mismatch");
    n_src_ = long(src_coords.size() / rank);
    n_rec_ = long(rec_coords.size() / rank);
    nt_ = long(std::floor((tn - t0) / dt)) + 1;
    src_ = SparseFunction::create("src", model.grid(), src_coords, nt_);
    rec_ = SparseFunction::create("rec", model.grid(), rec_coords, nt_);
    src_->locate();
    rec_->locate();
    auto w = ricker(f0, t0, dt, nt_);
    for (long t = 0; t < nt_; ++t)
        for (long p = 0; p < n_src_; ++p) src_->trace(t, p) = w[t];
}

} // namespace sf
