#include "sf/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

#include "sf/analytic.hpp"
#include "sf/emit.hpp"
#include "sf/error.hpp"
#include "sf/passes.hpp"
#include "sf/solve.hpp"
#include "sf/wavelet.hpp"

namespace sf {

namespace {

// Shared geometry of the analytic benchmark.
constexpr double kExtent = 400.0; // m
constexpr double kTn = 150.0;     // ms
constexpr double kVel = 1.5;      // m/ms
constexpr long kPadFactor = 32;

// The Ricker gets a quarter period on top of its built-in 1/f0 delay so the
// acausal tail clears t=0 without pushing the wake past the window end.
double source_value(SourceKind kind, double f0, double t) {
    return kind == SourceKind::Ricker ? ricker_value(f0, t - 0.25 / f0)
                                      : dgauss4_value(f0, t);
}

void parallel_for(long count, int nthreads, const std::function<void(long)>& body) {
    if (nthreads <= 1 || count <= 1) {
        for (long i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<long> next{0};
    std::vector<std::string> failures(static_cast<size_t>(count));
    std::vector<std::thread> pool;
    long nw = std::min<long>(nthreads, count);
    for (long w = 0; w < nw; ++w)
        pool.emplace_back([&] {
            for (;;) {
                long i = next.fetch_add(1);
                if (i >= count) return;
                try {
                    body(i);
                } catch (const std::exception& e) {
                    failures[size_t(i)] = e.what();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (const auto& f : failures)
        if (!f.empty()) throw StabilityError("sweep point failed: " + f);
}

// Relative trace L2 against the analytic constant-velocity solution on the
// 400 m benchmark. The source sits on the center node with strength
// 4*pi/(hx*hy) so the discrete response matches the analytic kernel; the sum
// skips t=0, t=nt-1 and the first computed row, which the window leaves as
// structural zeros.
double analytic_misfit(double h, double dt, int order, SourceKind kind, double f0,
                       const std::vector<double>& rec_offsets, Backend backend) {
    long n = std::lround(kExtent / h) + 1;
    long nbl = long(std::ceil(100.0 / h));
    std::vector<double> vel(size_t(n) * size_t(n), kVel);
    SeismicModel model({n, n}, {h, h}, {0.0, 0.0}, vel, nbl, order);
    long ci = n / 2;
    double cx = double(ci) * h;
    std::vector<double> src_xy = {cx, cx};
    std::vector<double> rec_xy;
    for (double off : rec_offsets) {
        rec_xy.push_back(cx + off);
        rec_xy.push_back(cx);
    }
    AcquisitionGeometry geom(model, src_xy, rec_xy, 0.0, kTn, dt, f0);
    long nt = geom.nt();
    long nrec = geom.n_rec();
    double gain = 4.0 * M_PI / (h * h);
    std::vector<double> q(static_cast<size_t>(nt));
    for (long t = 0; t < nt; ++t) {
        q[size_t(t)] = source_value(kind, f0, double(t) * dt);
        geom.src()->trace(t, 0) = gain * q[size_t(t)];
    }
    WaveOp fwd = forward_operator(model, geom, order);
    run_wave(fwd, backend);
    std::vector<double> ana = analytic_2d(model, q, dt, src_xy, rec_xy, kPadFactor);
    double num = 0, den = 0;
    for (long t = 1; t <= nt - 2; ++t)
        for (long p = 0; p < nrec; ++p) {
            double a = ana[size_t(t) * size_t(nrec) + size_t(p)];
            double d = geom.rec()->trace(t, p) - a;
            num += d * d;
            den += a * a;
        }
    if (!(den > 0.0)) throw SingularError("analytic reference is identically zero");
    return std::sqrt(num / den);
}

bool fit_points(const std::vector<ConvergencePoint>& pts, SlopeFit& fit) {
    std::vector<double> x, y;
    for (const auto& p : pts)
        if (p.fitted) {
            x.push_back(p.step);
            y.push_back(p.error);
        }
    if (x.size() < 3) return false;
    fit = fit_loglog(x, y);
    return true;
}

} // namespace

ConvergenceReport convergence_time(const TimeConfig& cfg) {
    if (cfg.dts.size() < 2) throw ParameterError("convergence_time: need >= 2 steps");
    ConvergenceReport rep;
    rep.space_order = cfg.space_order;
    rep.points.resize(cfg.dts.size());
    parallel_for(long(cfg.dts.size()), cfg.nthreads, [&](long i) {
        double dt = cfg.dts[size_t(i)];
        double err = analytic_misfit(cfg.h, dt, cfg.space_order, SourceKind::Ricker,
                                     cfg.f0, cfg.rec_offsets, cfg.backend);
        rep.points[size_t(i)] = {dt, err, true};
    });
    rep.fit_valid = fit_points(rep.points, rep.fit);
    return rep;
}

SpaceConfig space_defaults(int k) {
    SpaceConfig c;
    c.space_order = k;
    switch (k) {
    case 2:
        c.source = SourceKind::Ricker;
        c.f0 = 0.03;
        c.dt = 0.04;
        c.rec_offsets = {60, 72, 96};
        c.hs = {4.0, 3.0, 2.0, 1.5};
        break;
    case 4:
        c.source = SourceKind::Ricker;
        c.f0 = 0.03;
        c.dt = 0.04;
        c.rec_offsets = {72, 96};
        c.hs = {8.0, 6.0, 4.0, 3.0};
        break;
    case 6:
        c.source = SourceKind::DGauss4;
        c.f0 = 0.045;
        c.dt = 0.01;
        c.rec_offsets = {72};
        c.hs = {3.0, 2.4, 2.0, 1.8};
        break;
    case 8:
        c.source = SourceKind::DGauss4;
        c.f0 = 0.045;
        c.dt = 0.0025;
        c.rec_offsets = {90};
        c.hs = {2.5, 2.0, 1.8};
        break;
    case 10:
        c.source = SourceKind::DGauss4;
        c.f0 = 0.05;
        c.dt = 0.004;
        c.rec_offsets = {90};
        c.hs = {3.0, 2.5, 2.0};
        break;
    default:
        throw ParameterError("space_defaults: tuned orders are 2, 4, 6, 8, 10");
    }
    return c;
}

ConvergenceReport convergence_space(const SpaceConfig& cfg) {
    if (cfg.hs.empty()) throw ParameterError("convergence_space: empty sweep");
    ConvergenceReport rep;
    rep.space_order = cfg.space_order;
    rep.points.resize(cfg.hs.size());
    double h_min = *std::min_element(cfg.hs.begin(), cfg.hs.end());
    // Index hs.size() carries the floor run so it shares the worker pool.
    parallel_for(long(cfg.hs.size()) + 1, cfg.nthreads, [&](long i) {
        if (i == long(cfg.hs.size())) {
            rep.floor_est = analytic_misfit(h_min, cfg.dt, cfg.floor_order, cfg.source,
                                            cfg.f0, cfg.rec_offsets, cfg.backend);
            return;
        }
        double h = cfg.hs[size_t(i)];
        double err = analytic_misfit(h, cfg.dt, cfg.space_order, cfg.source, cfg.f0,
                                     cfg.rec_offsets, cfg.backend);
        rep.points[size_t(i)] = {h, err, true};
    });
    for (auto& p : rep.points)
        p.fitted = p.error >= cfg.exclusion * rep.floor_est;
    rep.fit_valid = fit_points(rep.points, rep.fit);
    return rep;
}

AdjointReport adjoint_test(const AdjointConfig& cfg) {
    if (cfg.ndim != 2 && cfg.ndim != 3)
        throw ParameterError("adjoint_test: ndim must be 2 or 3");
    long n = cfg.n;
    std::vector<long> shape(size_t(cfg.ndim), n);
    std::vector<double> spacing(size_t(cfg.ndim), cfg.h);
    std::vector<double> origin(size_t(cfg.ndim), 0.0);
    size_t npts = 1;
    for (long s : shape) npts *= size_t(s);
    // Two layers split along the last (fastest varying) axis.
    std::vector<double> vel(npts);
    for (size_t i = 0; i < npts; ++i)
        vel[i] = long(i % size_t(n)) < n / 2 ? 1.5 : 2.5;
    SeismicModel model(shape, spacing, origin, vel, cfg.nbl, cfg.space_order);
    double L = double(n - 1) * cfg.h;
    // Off-lattice source and receiver depths exercise the interpolation path.
    std::vector<double> src, rec;
    if (cfg.ndim == 2) {
        src = {0.5 * L + 0.37 * cfg.h, 2.13 * cfg.h};
        for (long i = 0; i < n; ++i) {
            rec.push_back(double(i) * cfg.h);
            rec.push_back(4.5 * cfg.h);
        }
    } else {
        src = {0.5 * L + 0.37 * cfg.h, 0.5 * L, 2.13 * cfg.h};
        for (long i = 0; i < n; ++i) {
            rec.push_back(double(i) * cfg.h);
            rec.push_back(0.5 * L);
            rec.push_back(4.5 * cfg.h);
        }
    }
    double dt = 0.8 * model.critical_dt(cfg.space_order);
    AcquisitionGeometry geom(model, src, rec, 0.0, cfg.tn, dt, cfg.f0);
    WaveOp fwd = forward_operator(model, geom, cfg.space_order);
    run_wave(fwd, cfg.backend);
    AdjointReport rep;
    for (long t = 0; t < geom.nt(); ++t)
        for (long p = 0; p < geom.n_rec(); ++p) {
            double d = geom.rec()->trace(t, p);
            rep.forward_dot += d * d;
        }
    // The receiver traces now hold d = F q, which is exactly the input the
    // adjoint injects.
    WaveOp adj = adjoint_operator(model, geom, cfg.space_order);
    run_wave(adj, cfg.backend);
    for (long t = 0; t < geom.nt(); ++t)
        for (long p = 0; p < geom.n_src(); ++p)
            rep.adjoint_dot += geom.src()->trace(t, p) * adj.smp->trace(t, p);
    rep.rel_err = std::abs(rep.forward_dot - rep.adjoint_dot) /
                  std::max(std::abs(rep.forward_dot),
                           std::numeric_limits<double>::min());
    return rep;
}

GradientReport gradient_test(const GradientConfig& cfg) {
    long nx = cfg.nx, nz = cfg.nz;
    double h = cfg.h;
    double lx = double(nx - 1) * h, lz = double(nz - 1) * h;
    std::vector<double> vel_true(size_t(nx) * size_t(nz));
    std::vector<double> vel_start(vel_true.size());
    for (long x = 0; x < nx; ++x)
        for (long z = 0; z < nz; ++z) {
            double depth = double(z) * h;
            size_t i = size_t(x) * size_t(nz) + size_t(z);
            vel_true[i] = depth < 0.5 * lz ? 1.5 : 2.5;
            // Smooth background: same asymptotes, 80 m transition.
            vel_start[i] = 2.0 + 0.5 * std::tanh((depth - 0.5 * lz) / 80.0);
        }
    SeismicModel model({nx, nz}, {h, h}, {0.0, 0.0}, vel_true, cfg.nbl,
                       cfg.space_order);
    std::vector<double> m_true = model.physical_m();
    double dt = 0.75 * model.critical_dt(cfg.space_order);
    std::vector<double> src = {0.5 * lx, 2.0 * h};
    std::vector<double> rec;
    for (long i = 0; i < nx; ++i) {
        rec.push_back(double(i) * h);
        rec.push_back(2.0 * h);
    }
    AcquisitionGeometry geom(model, src, rec, 0.0, cfg.tn, dt, cfg.f0);
    WaveOp obs_op = forward_operator(model, geom, cfg.space_order);
    run_wave(obs_op, cfg.backend);
    std::vector<double> observed(size_t(geom.nt()) * size_t(geom.n_rec()));
    for (long t = 0; t < geom.nt(); ++t)
        for (long p = 0; p < geom.n_rec(); ++p)
            observed[size_t(t) * size_t(geom.n_rec()) + size_t(p)] =
                geom.rec()->trace(t, p);

    model.set_velocity(vel_start);
    std::vector<double> m0 = model.physical_m();
    std::vector<double> dm(m0.size());
    for (size_t i = 0; i < m0.size(); ++i) dm[i] = m_true[i] - m0[i];

    GradientResult base = fwi_gradient(model, geom, observed, cfg.space_order,
                                       cfg.backend);
    GradientReport rep;
    rep.phi0 = base.objective;
    for (size_t i = 0; i < dm.size(); ++i) rep.dphi += base.gradient[i] * dm[i];

    rep.steps = cfg.steps;
    std::vector<double> m_s(m0.size());
    for (double s : cfg.steps) {
        for (size_t i = 0; i < m0.size(); ++i) m_s[i] = m0[i] + s * dm[i];
        model.set_physical_m(m_s);
        WaveOp fwd = forward_operator(model, geom, cfg.space_order);
        run_wave(fwd, cfg.backend);
        double phi = objective(*geom.rec(), observed);
        rep.eps0.push_back(std::abs(phi - rep.phi0));
        rep.eps1.push_back(std::abs(phi - rep.phi0 - s * rep.dphi));
    }
    model.set_physical_m(m0);

    // Below ~100 ulp of phi0 the remainder is floating-point cancellation
    // noise, not Taylor residual; such points leave the second-order fit.
    double noise = 100.0 * std::numeric_limits<double>::epsilon() * rep.phi0;
    rep.eps1_fitted.resize(rep.eps1.size());
    std::vector<double> x0, y0, x1, y1;
    for (size_t i = 0; i < cfg.steps.size(); ++i) {
        x0.push_back(cfg.steps[i]);
        y0.push_back(rep.eps0[i]);
        bool ok = rep.eps1[i] > noise;
        rep.eps1_fitted[i] = ok;
        if (ok) {
            x1.push_back(cfg.steps[i]);
            y1.push_back(rep.eps1[i]);
        }
    }
    rep.fit0 = fit_loglog(x0, y0);
    rep.fit1_valid = x1.size() >= 3;
    if (rep.fit1_valid) rep.fit1 = fit_loglog(x1, y1);
    return rep;
}

namespace {

struct BenchOp {
    std::shared_ptr<TimeFunction> u;
    std::shared_ptr<Function> m, damp;
    Operator op;
};

BenchOp acoustic_bench_op(long n, int order) {
    auto grid = std::make_shared<Grid>(std::vector<long>{n, n, n},
                                       std::vector<double>{10.0, 10.0, 10.0},
                                       std::vector<double>{0.0, 0.0, 0.0});
    BenchOp b;
    b.u = TimeFunction::create("u", grid, order, 2);
    b.m = Function::create("m", grid, 2);
    b.damp = Function::create("damp", grid, 2);
    std::fill(b.m->values(), b.m->values() + b.m->storage_size(), 1.0 / 2.25);
    Equation pde(b.m->ref() * b.u->dt2() + b.damp->ref() * b.u->dt(2),
                 b.u->laplace());
    std::vector<Equation> eqs;
    eqs.emplace_back(b.u->forward(), solve_linear(pde, b.u->forward()));
    b.op = compile("acoustic", eqs, CompileOptions{});
    return b;
}

double timed_run(BenchOp& b, long steps, Backend backend, int repeats) {
    RunArgs args;
    args.t_from = 1;
    args.t_to = 1 + steps;
    args.bind.set("dt", 1.0);
    args.check_finite = false;
    bool emitted = backend == Backend::Emitted ||
                   (backend == Backend::Auto && emit_backend_available());
    std::vector<double> times;
    for (int r = 0; r < std::max(repeats, 1); ++r) {
        std::fill(b.u->values(), b.u->values() + b.u->storage_size(), 0.0);
        ExecutionReport rep = emitted ? run_emitted(b.op, args) : run(b.op, args);
        times.push_back(rep.seconds);
    }
    std::sort(times.begin(), times.end());
    return times[times.size() / 2];
}

} // namespace

BenchReport bench(const BenchConfig& cfg) {
    BenchReport rep;
    for (int k : cfg.orders) {
        BenchOp b = acoustic_bench_op(cfg.n, k);
        refresh_metrics(b.op);
        rep.orders.push_back(k);
        rep.oi.push_back(b.op.metrics.oi);
        rep.flops.push_back(double(b.op.metrics.flops_per_point.total()));
    }
    BenchOp small = acoustic_bench_op(cfg.n, cfg.wall_order);
    rep.wall_small = timed_run(small, cfg.steps, cfg.backend, cfg.repeats);
    BenchOp big = acoustic_bench_op(2 * cfg.n, cfg.wall_order);
    rep.wall_big = timed_run(big, cfg.steps, cfg.backend, cfg.repeats);
    rep.wall_ratio = rep.wall_big / std::max(rep.wall_small, 1e-12);
    return rep;
}

} // namespace sf
