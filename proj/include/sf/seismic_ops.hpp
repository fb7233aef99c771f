#pragma once

#include <memory>
#include <vector>

#include "sf/execute.hpp"
#include "sf/geometry.hpp"
#include "sf/lower.hpp"
#include "sf/model.hpp"

namespace sf {

// Time-stepping acoustic operator plus the fields it owns. `inj` traces are
// caller input, `smp` traces are produced by the run. All seismic operators
// iterate the window [1, nt-1); rows 0, 1 and nt-1 of the sampled traces are
// structural zeros, which the adjoint pairing relies on.
struct WaveOp {
    Operator op;
    std::shared_ptr<TimeFunction> wavefield;
    std::shared_ptr<SparseFunction> inj, smp;
    double dt = 0;
    long nt = 0;
};

// Second-order-in-time update solved for u.forward, source traces injected
// with weight dt^2/m, receivers sampled by interpolation. With save, the full
// history is kept for gradient work.
WaveOp forward_operator(const SeismicModel& model, const AcquisitionGeometry& geom,
                        int space_order, bool save = false,
                        std::vector<long> tiles = {});

// Transpose of the forward map from source traces to receiver traces: damping
// sign flipped, solved for v.backward, receiver traces injected, field sampled
// at the source locations. Runs time-descending.
WaveOp adjoint_operator(const SeismicModel& model, const AcquisitionGeometry& geom,
                        int space_order);

// Backward sweep accumulating grad -= u[t] * v.dt2 against a saved forward
// history while injecting data residuals.
struct GradientOp {
    Operator op;
    std::shared_ptr<TimeFunction> v;
    std::shared_ptr<Function> grad;
    std::shared_ptr<SparseFunction> resid;
    double dt = 0;
    long nt = 0;
};

GradientOp gradient_operator(const SeismicModel& model,
                             const AcquisitionGeometry& geom, int space_order,
                             std::shared_ptr<TimeFunction> saved_u);

// Zeroes the owned wavefield and sampled traces, binds dt, and runs the
// operator over [1, nt-1) on the chosen backend.
ExecutionReport run_wave(WaveOp& w, Backend backend = Backend::Auto,
                         int nthreads = 1);
ExecutionReport run_gradient(GradientOp& g, Backend backend = Backend::Auto,
                             int nthreads = 1);

// 1/2 sum of squared trace mismatch.
double objective(const SparseFunction& pred, const std::vector<double>& observed);

struct GradientResult {
    double objective = 0;
    // d(objective)/dm per physical-domain cell, row-major; the adjoint of the
    // edge extension folds absorbing-layer cells onto their clamped sources.
    std::vector<double> gradient;
    std::vector<double> residual;
};

GradientResult fwi_gradient(const SeismicModel& model, AcquisitionGeometry& geom,
                            const std::vector<double>& observed, int space_order,
                            Backend backend = Backend::Auto);

struct FwiConfig {
    int space_order = 8;
    long n_iter = 15;
    // First-iteration gradient sets the fixed step: alpha = step_scale *
    // max|m0| / max|g1|.
    double step_scale = 0.05;
    double m_min = 0, m_max = 0;
    Backend backend = Backend::Auto;
    int nthreads = 1;
};

struct FwiResult {
    std::vector<double> objectives;
    std::vector<double> model_rms;
    std::vector<double> final_m;
};

// Fixed-step projected gradient descent over per-source shots; per-iteration
// shot gradients are computed in parallel and reduced in shot order. true_m,
// when given, only feeds the model_rms history.
FwiResult fwi(SeismicModel& model, std::vector<AcquisitionGeometry>& shots,
              const std::vector<std::vector<double>>& observed,
              const FwiConfig& cfg, const std::vector<double>* true_m = nullptr);

} // namespace sf
