#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "sf/geometry.hpp"
#include "sf/gridio.hpp"
#include "sf/lower.hpp"
#include "sf/model.hpp"
#include "sf/seismic_ops.hpp"
#include "sf/verify.hpp"
#include "sf/wavelet.hpp"

using namespace sf;

namespace {

SeismicModel constant_model(long n, double h, double c, long nbl, int order = 8) {
    std::vector<double> vel(size_t(n) * size_t(n), c);
    return SeismicModel({n, n}, {h, h}, {0.0, 0.0}, vel, nbl, order);
}

} // namespace

TEST_CASE("damping vanishes inside the physical domain and peaks at the edge") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 6);
    const auto& damp = *m.damp();
    long n = 21 + 2 * 6;
    for (long i = 6; i < n - 6; ++i)
        for (long j = 6; j < n - 6; ++j) CHECK(damp.at({i, j}) == 0.0);
    long mid = n / 2;
    double prev = 0.0;
    for (long i = 5; i >= 0; --i) {
        double cur = damp.at({i, mid});
        CHECK(cur > prev);
        prev = cur;
    }
    double edge = damp.at({0, mid});
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) CHECK(damp.at({i, j}) <= 2.0 * edge + 1e-18);
    CHECK(damp.at({0, 0}) == doctest::Approx(2.0 * edge).epsilon(1e-12));
}

TEST_CASE("nbl=0 leaves no absorbing layer") {
    SeismicModel m = constant_model(15, 10.0, 2.0, 0);
    const auto& damp = *m.damp();
    for (long i = 0; i < 15; ++i)
        for (long j = 0; j < 15; ++j) CHECK(damp.at({i, j}) == 0.0);
    CHECK(m.grid()->shape()[0] == 15);
}

TEST_CASE("second-order critical dt is h/(2c) in 2-D") {
    SeismicModel m = constant_model(15, 10.0, 2.0, 0);
    CHECK(m.critical_dt(2) == doctest::Approx(10.0 / (2.0 * 2.0)).epsilon(1e-14));
    CHECK(m.critical_dt(8) < m.critical_dt(2));
}

TEST_CASE("velocity is edge-extended into the absorbing layer") {
    long n = 9, nbl = 5;
    std::vector<double> vel(size_t(n) * size_t(n));
    for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) vel[size_t(i) * n + j] = 1.0 + 0.1 * i + 0.01 * j;
    SeismicModel m({n, n}, {10.0, 10.0}, {0.0, 0.0}, vel, nbl, 4);
    const auto& mm = *m.m();
    auto slow = [](double v) { return 1.0 / (v * v); };
    CHECK(mm.at({0, 0}) == doctest::Approx(slow(vel[0])).epsilon(1e-14));
    CHECK(mm.at({nbl, nbl}) == doctest::Approx(slow(vel[0])).epsilon(1e-14));
    CHECK(mm.at({nbl + n - 1 + nbl, nbl}) ==
          doctest::Approx(slow(vel[size_t(n - 1) * n])).epsilon(1e-14));
    CHECK(mm.at({nbl + 3, 0}) == doctest::Approx(slow(vel[3 * 9])).epsilon(1e-14));
}

TEST_CASE("physical_m roundtrips through set_physical_m") {
    SeismicModel m = constant_model(11, 10.0, 1.5, 4);
    std::vector<double> vals = m.physical_m();
    for (size_t i = 0; i < vals.size(); ++i) vals[i] += 0.001 * double(i % 7);
    m.set_physical_m(vals);
    CHECK(m.physical_m() == vals);
}

TEST_CASE("geometry derives the time axis and preloads a unit Ricker") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 4);
    double dt = 2.0, tn = 101.0;
    AcquisitionGeometry g(m, {100.0, 100.0}, {50.0, 50.0, 150.0, 50.0}, 0.0, tn, dt,
                          0.01);
    CHECK(g.nt() == long(std::floor(tn / dt)) + 1);
    CHECK(g.n_src() == 1);
    CHECK(g.n_rec() == 2);
    double peak = 0;
    long peak_t = 0;
    for (long t = 0; t < g.nt(); ++t) {
        double v = g.src()->trace(t, 0);
        if (v > peak) {
            peak = v;
            peak_t = t;
        }
    }
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(double(peak_t) * dt - 100.0) <= dt);
    for (long t = 0; t < g.nt(); ++t)
        for (long p = 0; p < 2; ++p) CHECK(g.rec()->trace(t, p) == 0.0);
}

TEST_CASE("geometry rejects an unstable dt") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 4);
    double crit = m.critical_dt();
    CHECK_THROWS_AS(AcquisitionGeometry(m, {100.0, 100.0}, {50.0, 50.0}, 0.0, 100.0,
                                        crit * 1.5, 0.01),
                    StabilityError);
}

TEST_CASE("interpolation and injection are exact matrix transposes") {
    auto grid = std::make_shared<Grid>(std::vector<long>{5, 5},
                                       std::vector<double>{10.0, 10.0},
                                       std::vector<double>{0.0, 0.0});
    auto f = Function::create("f", grid, 2);
    auto pts = SparseFunction::create(
        "pts", grid, {7.3, 12.1, 25.0, 25.0, 38.6, 3.2, 0.0, 40.0}, 1);
    pts->locate();
    long np = pts->npoints();

    Operator interp = lower("interp", {pts->interpolate(f->ref())});
    Operator inject = lower("inject", pts->inject(f->ref(), pts->trace_at(0)));
    RunArgs args;
    args.t_from = 0;
    args.t_to = 1;

    // A[p][cell] from interpolation of grid basis vectors, B[cell][p] from
    // injection of point basis vectors; adjoint pairing means A == B^T with
    // the very same products, so equality is bitwise.
    std::vector<std::vector<double>> A(size_t(np), std::vector<double>(25, 0.0));
    for (long i = 0; i < 5; ++i)
        for (long j = 0; j < 5; ++j) {
            std::fill(f->values(), f->values() + f->storage_size(), 0.0);
            f->at({i, j}) = 1.0;
            for (long p = 0; p < np; ++p) pts->trace(0, p) = 0.0;
            run(interp, args);
            for (long p = 0; p < np; ++p) A[size_t(p)][size_t(i * 5 + j)] = pts->trace(0, p);
        }
    for (long p = 0; p < np; ++p) {
        std::fill(f->values(), f->values() + f->storage_size(), 0.0);
        for (long q = 0; q < np; ++q) pts->trace(0, q) = q == p ? 1.0 : 0.0;
        run(inject, args);
        for (long i = 0; i < 5; ++i)
            for (long j = 0; j < 5; ++j)
                CHECK(f->at({i, j}) == A[size_t(p)][size_t(i * 5 + j)]);
    }
}

TEST_CASE("forward/adjoint dot test at order 4") {
    AdjointConfig cfg;
    cfg.ndim = 2;
    cfg.n = 48;
    cfg.space_order = 4;
    cfg.tn = 200.0;
    AdjointReport r = adjoint_test(cfg);
    CHECK(r.forward_dot > 0.0);
    CHECK(r.rel_err <= 1e-12);
}

TEST_CASE("zero source produces zero receivers") {
    SeismicModel m = constant_model(31, 10.0, 1.5, 8);
    AcquisitionGeometry g(m, {150.0, 150.0}, {50.0, 100.0, 250.0, 100.0}, 0.0,
                          150.0, 0.9 * m.critical_dt(), 0.01);
    for (long t = 0; t < g.nt(); ++t) g.src()->trace(t, 0) = 0.0;
    WaveOp w = forward_operator(m, g, 8);
    run_wave(w);
    for (long t = 0; t < g.nt(); ++t)
        for (long p = 0; p < g.n_rec(); ++p) CHECK(g.rec()->trace(t, p) == 0.0);
}

TEST_CASE("absorbing layer dissipates the wavefield") {
    SeismicModel m = constant_model(41, 10.0, 1.5, 20);
    double dt = 0.9 * m.critical_dt();
    AcquisitionGeometry g(m, {200.0, 200.0}, {200.0, 300.0}, 0.0, 900.0, dt, 0.01);
    WaveOp w = forward_operator(m, g, 8, true);
    run_wave(w);
    auto& u = *w.wavefield;
    std::vector<long> shape = u.grid()->shape();
    auto energy = [&](long t) {
        double e = 0;
        for (long i = 0; i < shape[0]; ++i)
            for (long j = 0; j < shape[1]; ++j) {
                double v = u.at({t, i, j});
                e += v * v;
            }
        return e;
    };
    double peak = 0;
    for (long t = 0; t < g.nt(); ++t) peak = std::max(peak, energy(t));
    CHECK(peak > 0.0);
    CHECK(energy(g.nt() - 1) < 0.05 * peak);
}

TEST_CASE("gradient matches brute-force finite differences on a tiny model") {
    long n = 5, nbl = 4;
    double h = 10.0;
    std::vector<double> vel_true(size_t(n) * n, 1.5);
    for (size_t i = 0; i < vel_true.size(); ++i)
        if (i % n >= size_t(n) / 2) vel_true[i] = 1.8;
    SeismicModel model({n, n}, {h, h}, {0.0, 0.0}, vel_true, nbl, 2);
    double dt = 0.8 * model.critical_dt(2);
    double tn = 9.0 * dt;
    AcquisitionGeometry geom(model, {20.0, 10.0}, {10.0, 30.0, 30.0, 30.0}, 0.0,
                             tn, dt, 0.05);
    REQUIRE(geom.nt() <= 10);
    WaveOp obs_op = forward_operator(model, geom, 2);
    run_wave(obs_op);
    std::vector<double> observed(size_t(geom.nt()) * size_t(geom.n_rec()));
    for (long t = 0; t < geom.nt(); ++t)
        for (long p = 0; p < geom.n_rec(); ++p)
            observed[size_t(t) * size_t(geom.n_rec()) + size_t(p)] =
                geom.rec()->trace(t, p);

    std::vector<double> vel0(size_t(n) * n, 1.6);
    model.set_velocity(vel0);
    std::vector<double> m0 = model.physical_m();
    GradientResult res = fwi_gradient(model, geom, observed, 2);
    REQUIRE(res.objective > 0.0);

    double gmax = 0;
    for (double g : res.gradient) gmax = std::max(gmax, std::abs(g));
    REQUIRE(gmax > 0.0);

    double delta = 1e-5;
    auto phi_at = [&](const std::vector<double>& mv) {
        model.set_physical_m(mv);
        WaveOp w = forward_operator(model, geom, 2);
        run_wave(w);
        return objective(*geom.rec(), observed);
    };
    for (size_t i = 0; i < m0.size(); ++i) {
        std::vector<double> mp = m0, mm = m0;
        mp[i] += delta;
        mm[i] -= delta;
        double fd = (phi_at(mp) - phi_at(mm)) / (2.0 * delta);
        double g = res.gradient[i];
        if (std::max(std::abs(fd), std::abs(g)) < 1e-9 * gmax) continue;
        CHECK(std::abs(fd - g) <= 1e-5 * std::max(std::abs(fd), std::abs(g)));
    }
}

TEST_CASE("zero residual gives zero objective and zero gradient") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 6);
    AcquisitionGeometry g(m, {100.0, 20.0}, {40.0, 40.0, 160.0, 40.0}, 0.0, 120.0,
                          0.8 * m.critical_dt(), 0.01);
    WaveOp w = forward_operator(m, g, 8);
    run_wave(w);
    std::vector<double> observed(size_t(g.nt()) * size_t(g.n_rec()));
    for (long t = 0; t < g.nt(); ++t)
        for (long p = 0; p < g.n_rec(); ++p)
            observed[size_t(t) * size_t(g.n_rec()) + size_t(p)] = g.rec()->trace(t, p);
    GradientResult res = fwi_gradient(m, g, observed, 8);
    CHECK(res.objective == 0.0);
    for (double v : res.gradient) CHECK(v == 0.0);
}

TEST_CASE("fwi returns immediately when started at the true model") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 6);
    std::vector<AcquisitionGeometry> shots;
    shots.emplace_back(m, std::vector<double>{100.0, 20.0},
                       std::vector<double>{40.0, 40.0, 160.0, 40.0}, 0.0, 120.0,
                       0.8 * m.critical_dt(), 0.01);
    WaveOp w = forward_operator(m, shots[0], 8);
    run_wave(w);
    std::vector<std::vector<double>> observed(1);
    observed[0].resize(size_t(shots[0].nt()) * size_t(shots[0].n_rec()));
    for (long t = 0; t < shots[0].nt(); ++t)
        for (long p = 0; p < shots[0].n_rec(); ++p)
            observed[0][size_t(t) * size_t(shots[0].n_rec()) + size_t(p)] =
                shots[0].rec()->trace(t, p);
    FwiConfig cfg;
    cfg.n_iter = 5;
    cfg.m_min = 0.1;
    cfg.m_max = 1.0;
    std::vector<double> m_true = m.physical_m();
    FwiResult res = fwi(m, shots, observed, cfg, &m_true);
    CHECK(res.objectives.size() == 1);
    CHECK(res.objectives[0] == 0.0);
    CHECK(res.final_m == m_true);
}

TEST_CASE("fwi with step_scale zero keeps the model fixed") {
    SeismicModel m = constant_model(21, 10.0, 1.5, 6);
    std::vector<AcquisitionGeometry> shots;
    shots.emplace_back(m, std::vector<double>{100.0, 20.0},
                       std::vector<double>{40.0, 40.0, 160.0, 40.0}, 0.0, 120.0,
                       0.7 * m.critical_dt(), 0.01);
    WaveOp w = forward_operator(m, shots[0], 8);
    run_wave(w);
    std::vector<std::vector<double>> observed(1);
    observed[0].resize(size_t(shots[0].nt()) * size_t(shots[0].n_rec()));
    for (long t = 0; t < shots[0].nt(); ++t)
        for (long p = 0; p < shots[0].n_rec(); ++p)
            observed[0][size_t(t) * size_t(shots[0].n_rec()) + size_t(p)] =
                shots[0].rec()->trace(t, p);
    m.set_velocity(std::vector<double>(21 * 21, 1.7));
    std::vector<double> m0 = m.physical_m();
    FwiConfig cfg;
    cfg.n_iter = 2;
    cfg.step_scale = 0.0;
    cfg.m_min = 0.1;
    cfg.m_max = 1.0;
    FwiResult res = fwi(m, shots, observed, cfg);
    CHECK(res.final_m == m0);
    REQUIRE(res.objectives.size() == 2);
    CHECK(res.objectives[0] == res.objectives[1]);
    CHECK(res.objectives[0] > 0.0);
}

TEST_CASE("grid container and trace CSV roundtrip exactly") {
    std::vector<long> shape = {3, 4};
    std::vector<double> data(12);
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (auto& v : data) v = uni(rng);
    std::string path = "roundtrip_test.sfgd";
    write_grid(path, shape, data);
    GridData g = read_grid(path);
    CHECK(g.shape == shape);
    CHECK(g.data == data);
    std::remove(path.c_str());

    auto grid = std::make_shared<Grid>(std::vector<long>{5, 5},
                                       std::vector<double>{10.0, 10.0},
                                       std::vector<double>{0.0, 0.0});
    auto s = SparseFunction::create("s", grid, {5.0, 5.0, 35.0, 12.0}, 6);
    std::vector<double> times;
    for (long t = 0; t < 6; ++t) {
        times.push_back(0.5 * double(t));
        for (long p = 0; p < 2; ++p) s->trace(t, p) = uni(rng);
    }
    std::vector<double> saved(s->traces()->values(),
                              s->traces()->values() + 12);
    std::string csv = "roundtrip_test.csv";
    write_traces_csv(csv, *s, times);
    for (long t = 0; t < 6; ++t)
        for (long p = 0; p < 2; ++p) s->trace(t, p) = 0.0;
    std::vector<double> times_back;
    read_traces_csv(csv, *s, &times_back);
    CHECK(times_back == times);
    for (long t = 0; t < 6; ++t)
        for (long p = 0; p < 2; ++p)
            CHECK(s->trace(t, p) == saved[size_t(t) * 2 + size_t(p)]);
    std::remove(csv.c_str());
}
