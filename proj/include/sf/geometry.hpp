#pragma once

#include <memory>
#include <vector>

#include "sf/model.hpp"
#include "sf/sparse.hpp"

namespace sf {

// Source/receiver layout plus the shared time axis. Coordinates are flat
// rank-major lists in physical units; nt = floor((tn - t0)/dt) + 1. Source
// traces are preloaded with a Ricker wavelet of peak frequency f0 (1/ms).
class AcquisitionGeometry {
public:
    AcquisitionGeometry(const SeismicModel& model, std::vector<double> src_coords,
                        std::vector<double> rec_coords, double t0, double tn,
                        double dt, double f0);

    const std::shared_ptr<SparseFunction>& src() const { return src_; }
    const std::shared_ptr<SparseFunction>& rec() const { return rec_; }
    double t0() const { return t0_; }
    double tn() const { return tn_; }
    double dt() const { return dt_; }
    double f0() const { return f0_; }
    long nt() const { return nt_; }
    long n_src() const { return n_src_; }
    long n_rec() const { return n_rec_; }

private:
    std::shared_ptr<SparseFunction> src_, rec_;
    double t0_, tn_, dt_, f0_;
    long nt_, n_src_, n_rec_;
};

} // namespace sf
