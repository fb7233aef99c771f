#pragma once

#include <vector>

#include "sf/seismic_ops.hpp"
#include "sf/slopefit.hpp"

namespace sf {

// One measured sweep sample. step is dt (temporal) or h (spatial).
struct ConvergencePoint {
    double step = 0;
    double error = 0;
    bool fitted = true;
};

struct ConvergenceReport {
    int space_order = 0;
    double floor_est = 0;
    std::vector<ConvergencePoint> points;
    bool fit_valid = false;
    SlopeFit fit{};
};

// Constant-velocity 2-D benchmark against the analytic solution: 400 m x
// 400 m domain, source on the center node, 150 ms propagation. The misfit
// is the relative trace L2 over t in [1, nt-2]; d[0] and d[nt-1] are
// structural zeros of the time window and carry no solution.
struct TimeConfig {
    double f0 = 0.04;
    double h = 2.0;
    int space_order = 10;
    std::vector<double> rec_offsets = {60, 80, 100};
    std::vector<double> dts = {0.42, 0.34, 0.27, 0.21, 0.17};
    Backend backend = Backend::Auto;
    int nthreads = 1;
};

ConvergenceReport convergence_time(const TimeConfig& cfg = {});

enum class SourceKind { Ricker, DGauss4 };

// Spatial sweep for one discretization order. An order-12 run at the finest
// h measures the non-spatial error floor; points below exclusion * floor are
// saturated and left out of the fit. Receiver offsets must be multiples of
// every h in the sweep so sampling never interpolates.
struct SpaceConfig {
    int space_order = 8;
    SourceKind source = SourceKind::DGauss4;
    double f0 = 0.045;
    double dt = 0.0025;
    std::vector<double> rec_offsets = {90};
    std::vector<double> hs = {2.5, 2.0, 1.8};
    int floor_order = 12;
    double exclusion = 10.0;
    Backend backend = Backend::Auto;
    int nthreads = 1;
};

// Tuned sweep for k in {2, 4, 6, 8, 10}; k=10 saturates by design and is
// reported without a slope gate.
SpaceConfig space_defaults(int k);

ConvergenceReport convergence_space(const SpaceConfig& cfg);

// <F q, d> vs <q, F^T d> with d = F q, Ricker source, two-layer model,
// receivers on a horizontal line. Machine-precision equality is the pass.
struct AdjointConfig {
    int ndim = 2;
    long n = 64;
    int space_order = 8;
    double h = 10.0;
    long nbl = 10;
    double tn = 300.0;
    double f0 = 0.01;
    Backend backend = Backend::Auto;
};

struct AdjointReport {
    double forward_dot = 0;
    double adjoint_dot = 0;
    double rel_err = 0;
};

AdjointReport adjoint_test(const AdjointConfig& cfg = {});

// Taylor remainders of the FWI objective around a smooth background model
// along dm = m_true - m0: eps0(s) = |Phi(m0 + s dm) - Phi(m0)| shrinks at
// slope 1, eps1(s) = |Phi(m0 + s dm) - Phi(m0) - s <g, dm>| at slope 2.
// eps1 points inside the floating-point cancellation floor are excluded
// from its fit.
struct GradientConfig {
    long nx = 81;
    long nz = 61;
    double h = 10.0;
    int space_order = 8;
    long nbl = 30;
    double tn = 450.0;
    double f0 = 0.012;
    std::vector<double> steps = {1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    Backend backend = Backend::Auto;
};

struct GradientReport {
    double phi0 = 0;
    double dphi = 0;
    std::vector<double> steps;
    std::vector<double> eps0;
    std::vector<double> eps1;
    std::vector<bool> eps1_fitted;
    SlopeFit fit0{};
    SlopeFit fit1{};
    bool fit1_valid = false;
};

GradientReport gradient_test(const GradientConfig& cfg = {});

// Compile-time metrics per space order on the 3-D acoustic stencil plus a
// wall-clock scaling probe (n^3 vs (2n)^3 at fixed step count).
struct BenchConfig {
    std::vector<int> orders = {2, 4, 6, 8, 12};
    long n = 32;
    long steps = 800;
    int wall_order = 8;
    int repeats = 3;
    Backend backend = Backend::Auto;
};

struct BenchReport {
    std::vector<int> orders;
    std::vector<double> oi;
    std::vector<double> flops;
    double wall_small = 0;
    double wall_big = 0;
    double wall_ratio = 0;
};

BenchReport bench(const BenchConfig& cfg = {});

} // namespace sf
