#include "sf/seismic_ops.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sf/emit.hpp"
#include "sf/error.hpp"
#include "sf/solve.hpp"

namespace sf {

namespace {

void check_cfl(const SeismicModel& model, const AcquisitionGeometry& geom,
               int space_order) {
    double crit = model.critical_dt(space_order);
    if (geom.dt() > crit * (1.0 + 1e-12))
        throw StabilityError("dt " + std::to_string(geom.dt()) +
                             " exceeds the stable limit " + std::to_string(crit) +
                             " at order " + std::to_string(space_order));
}

Expr injection_weight(const SeismicModel& model) {
    return pow_int(symbol("dt"), 2) * pow_int(model.m()->ref(), -1);
}

void zero_field(FunctionBase& f) {
    std::fill(f.values(), f.values() + f.storage_size(), 0.0);
}

void zero_traces(SparseFunction& s) {
    for (long t = 0; t < s.nt(); ++t)
        for (long p = 0; p < s.npoints(); ++p) s.trace(t, p) = 0.0;
}

std::vector<double> point_coords(const SparseFunction& s, size_t ndim) {
    std::vector<double> c;
    for (long p = 0; p < s.npoints(); ++p)
        for (size_t d = 0; d < ndim; ++d) c.push_back(s.coord(p, d));
    return c;
}

ExecutionReport run_window(Operator& op, double dt, long nt, Backend backend,
                           int nthreads) {
    RunArgs args;
    args.t_from = 1;
    args.t_to = nt - 1;
    args.nthreads = nthreads;
    args.bind.set("dt", dt);
    bool emitted = backend == Backend::Emitted ||
                   (backend == Backend::Auto && emit_backend_available());
    return emitted ? run_emitted(op, args) : run(op, args);
}

} // namespace

WaveOp forward_operator(const SeismicModel& model, const AcquisitionGeometry& geom,
                        int space_order, bool save, std::vector<long> tiles) {
    check_cfl(model, geom, space_order);
    WaveOp w;
    w.dt = geom.dt();
    w.nt = geom.nt();
    w.inj = geom.src();
    w.smp = geom.rec();
    w.wavefield = save ? TimeFunction::create("u", model.grid(), space_order, 2,
                                              geom.nt())
                       : TimeFunction::create("u", model.grid(), space_order, 2);
    auto& u = w.wavefield;
    Equation pde(model.m()->ref() * u->dt2() + model.damp()->ref() * u->dt(2),
                 u->laplace());
    std::vector<Equation> eqs;
    eqs.emplace_back(u->forward(), solve_linear(pde, u->forward()));
    for (auto& e :
         w.inj->inject(u->forward(), w.inj->trace_at(0) * injection_weight(model)))
        eqs.push_back(e);
    eqs.push_back(w.smp->interpolate(u->ref()));
    CompileOptions opts;
    opts.tiles = std::move(tiles);
    w.op = compile("forward", eqs, opts);
    return w;
}

WaveOp adjoint_operator(const SeismicModel& model, const AcquisitionGeometry& geom,
                        int space_order) {
    check_cfl(model, geom, space_order);
    WaveOp w;
    w.dt = geom.dt();
    w.nt = geom.nt();
    w.inj = geom.rec();
    w.smp = SparseFunction::create(
        "srca", model.grid(),
        point_coords(*geom.src(), model.grid()->shape().size()), geom.nt());
    w.smp->locate();
    w.wavefield = TimeFunction::create("v", model.grid(), space_order, 2);
    auto& v = w.wavefield;
    Equation pde(model.m()->ref() * v->dt2() - model.damp()->ref() * v->dt(2),
                 v->laplace());
    std::vector<Equation> eqs;
    eqs.emplace_back(v->backward(), solve_linear(pde, v->backward()));
    for (auto& e :
         w.inj->inject(v->backward(), w.inj->trace_at(0) * injection_weight(model)))
        eqs.push_back(e);
    eqs.push_back(w.smp->interpolate(v->ref()));
    w.op = compile("adjoint", eqs, CompileOptions{});
    return w;
}

GradientOp gradient_operator(const SeismicModel& model,
                             const AcquisitionGeometry& geom, int space_order,
                             std::shared_ptr<TimeFunction> saved_u) {
    check_cfl(model, geom, space_order);
    if (!saved_u || saved_u->time_buffered() || saved_u->time_slots() != geom.nt())
        throw ParameterError("gradient_operator: saved forward history required");
    GradientOp g;
    g.dt = geom.dt();
    g.nt = geom.nt();
    g.resid = SparseFunction::create(
        "resid", model.grid(),
        point_coords(*geom.rec(), model.grid()->shape().size()), geom.nt());
    g.resid->locate();
    g.v = TimeFunction::create("v", model.grid(), space_order, 2);
    g.grad = Function::create("grad", model.grid(), space_order);
    auto& v = g.v;
    Equation pde(model.m()->ref() * v->dt2() - model.damp()->ref() * v->dt(2),
                 v->laplace());
    std::vector<Equation> eqs;
    eqs.emplace_back(v->backward(), solve_linear(pde, v->backward()));
    for (auto& e : g.resid->inject(v->backward(),
                                   g.resid->trace_at(0) * injection_weight(model)))
        eqs.push_back(e);
    eqs.emplace_back(g.grad->ref(), g.grad->ref() - saved_u->ref() * v->dt2());
    g.op = compile("gradient", eqs, CompileOptions{});
    return g;
}

ExecutionReport run_wave(WaveOp& w, Backend backend, int nthreads) {
    zero_field(*w.wavefield);
    zero_traces(*w.smp);
    return run_window(w.op, w.dt, w.nt, backend, nthreads);
}

ExecutionReport run_gradient(GradientOp& g, Backend backend, int nthreads) {
    zero_field(*g.v);
    zero_field(*g.grad);
    return run_window(g.op, g.dt, g.nt, backend, nthreads);
}

double objective(const SparseFunction& pred, const std::vector<double>& observed) {
    size_t n = size_t(pred.nt()) * size_t(pred.npoints());
    if (observed.size() != n)
        throw ParameterError("objective: observed trace shape mismatch");
    double phi = 0;
    for (long t = 0; t < pred.nt(); ++t)
        for (long p = 0; p < pred.npoints(); ++p) {
            double r = pred.trace(t, p) - observed[size_t(t) * pred.npoints() + p];
            phi += 0.5 * r * r;
        }
    return phi;
}

namespace {

// Adjoint of the edge-clamped extension: folds every padded cell's gradient
// onto the physical cell it was copied from.
std::vector<double> fold_gradient(const SeismicModel& model, const Function& grad) {
    const auto& pshape = model.physical_shape();
    const auto& shape = model.grid()->shape();
    size_t n = 1;
    for (long e : pshape) n *= size_t(e);
    std::vector<double> out(n, 0.0);
    std::vector<long> idx(shape.size(), 0);
    for (;;) {
        size_t flat = 0;
        for (size_t d = 0; d < shape.size(); ++d) {
            long p = std::clamp(idx[d] - model.nbl(), 0L, pshape[d] - 1);
            flat = flat * size_t(pshape[d]) + size_t(p);
        }
        out[flat] += grad.at(idx);
        size_t d = shape.size();
        bool done = true;
        while (d > 0) {
            --d;
            if (++idx[d] < shape[d]) {
                done = false;
                break;
            }
            idx[d] = 0;
        }
        if (done) break;
    }
    return out;
}

} // namespace

GradientResult fwi_gradient(const SeismicModel& model, AcquisitionGeometry& geom,
                            const std::vector<double>& observed, int space_order,
                            Backend backend) {
    WaveOp fwd = forward_operator(model, geom, space_order, true);
    run_wave(fwd, backend);
    GradientResult res;
    res.objective = objective(*geom.rec(), observed);
    GradientOp g = gradient_operator(model, geom, space_order, fwd.wavefield);
    res.residual.resize(size_t(geom.nt()) * size_t(geom.n_rec()));
    for (long t = 0; t < geom.nt(); ++t)
        for (long p = 0; p < geom.n_rec(); ++p) {
            double r = geom.rec()->trace(t, p) -
                       observed[size_t(t) * geom.n_rec() + p];
            res.residual[size_t(t) * geom.n_rec() + p] = r;
            g.resid->trace(t, p) = r;
        }
    run_gradient(g, backend);
    res.gradient = fold_gradient(model, *g.grad);
    return res;
}

FwiResult fwi(SeismicModel& model, std::vector<AcquisitionGeometry>& shots,
              const std::vector<std::vector<double>>& observed,
              const FwiConfig& cfg, const std::vector<double>* true_m) {
    if (shots.empty() || shots.size() != observed.size())
        throw ParameterError("fwi: one observed record per shot required");
    if (!(cfg.m_min > 0.0) || !(cfg.m_max > cfg.m_min))
        throw ParameterError("fwi: bad model box");
    FwiResult out;
    std::vector<double> m = model.physical_m();
    double alpha = 0;
    auto rms_error = [&](const std::vector<double>& cur) {
        if (!true_m) return 0.0;
        double s = 0;
        for (size_t i = 0; i < cur.size(); ++i) {
            double d = cur[i] - (*true_m)[i];
            s += d * d;
        }
        return std::sqrt(s / double(cur.size()));
    };
    for (long it = 0; it < cfg.n_iter; ++it) {
        std::vector<GradientResult> parts(shots.size());
        std::vector<std::thread> pool;
        std::vector<std::string> failures(shots.size());
        size_t stride = cfg.nthreads > 1 ? size_t(cfg.nthreads) : 1;
        for (size_t base = 0; base < shots.size(); base += stride) {
            size_t hi = std::min(shots.size(), base + stride);
            for (size_t s = base; s < hi; ++s)
                pool.emplace_back([&, s] {
                    try {
                        parts[s] = fwi_gradient(model, shots[s], observed[s],
                                                cfg.space_order, cfg.backend);
                    } catch (const Error& e) {
                        failures[s] = e.what();
                    }
                });
            for (auto& th : pool) th.join();
            pool.clear();
        }
        for (const auto& f : failures)
            if (!f.empty()) throw StabilityError("fwi: shot failed: " + f);
        double phi = 0;
        std::vector<double> g(m.size(), 0.0);
        for (const auto& p : parts) {
            phi += p.objective;
            for (size_t i = 0; i < g.size(); ++i) g[i] += p.gradient[i];
        }
        if (!std::isfinite(phi))
            throw StabilityError("fwi: non-finite objective at iteration " +
                                 std::to_string(it));
        out.objectives.push_back(phi);
        out.model_rms.push_back(rms_error(m));
        if (it == 0) {
            double gmax = 0, mmax = 0;
            for (double v : g) gmax = std::max(gmax, std::abs(v));
            for (double v : m) mmax = std::max(mmax, std::abs(v));
            if (gmax == 0.0) {
                out.final_m = m;
                return out;
            }
            alpha = cfg.step_scale * mmax / gmax;
        }
        for (size_t i = 0; i < m.size(); ++i)
            m[i] = std::clamp(m[i] - alpha * g[i], cfg.m_min, cfg.m_max);
        model.set_physical_m(m);
    }
    out.model_rms.push_back(rms_error(m));
    out.final_m = m;
    return out;
}

} // namespace sf
