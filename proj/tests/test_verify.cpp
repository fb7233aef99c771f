#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sf/slopefit.hpp"
#include "sf/verify.hpp"
#include "sf/wavelet.hpp"

using namespace sf;

TEST_CASE("loglog fit recovers an exact power law") {
    std::vector<double> x = {1.0, 2.0, 4.0, 8.0};
    std::vector<double> y;
    for (double v : x) y.push_back(3.5 * std::pow(v, 2.25));
    SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.25).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(std::log(3.5)).epsilon(1e-12));
    CHECK(f.residual <= 1e-12);
}

TEST_CASE("loglog fit rejects degenerate input") {
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0}, {1.0, 2.0}), ParameterError);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 2.0}, {1.0, 2.0, 3.0}), ParameterError);
    CHECK_THROWS_AS(fit_loglog({1.0, 2.0, 3.0}, {1.0, -2.0, 3.0}), ParameterError);
    CHECK_THROWS_AS(fit_loglog({1.0, 3.0, 2.0}, {1.0, 2.0, 3.0}), ParameterError);
}

TEST_CASE("ricker wavelet peaks at 1 after its delay") {
    double f0 = 0.01, dt = 0.5;
    std::vector<double> w = ricker(f0, 0.0, dt, 401);
    CHECK(w[200] == doctest::Approx(1.0).epsilon(1e-14));
    double peak = 0;
    for (double v : w) peak = std::max(peak, std::abs(v));
    CHECK(peak == doctest::Approx(1.0).epsilon(1e-14));
    // (1 - 2*pi^2) * exp(-pi^2) at t = 0; the 1/f0 delay leaves this much.
    CHECK(std::abs(w[0]) < 1e-3);
    CHECK(std::abs(dgauss4_value(f0, 0.0)) < std::abs(w[0]));
    CHECK_THROWS_AS(ricker(0.0, 0.0, dt, 10), ParameterError);
    CHECK_THROWS_AS(ricker(f0, 0.0, -1.0, 10), ParameterError);
}

TEST_CASE("dgauss4 wavelet peaks at 1 and starts deeply quiet") {
    double fp = 0.045;
    CHECK(dgauss4_value(fp, 2.0 / fp) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(dgauss4_value(fp, 0.0)) < 1e-5);
    double peak = 0;
    for (double t = 0; t < 4.0 / fp; t += 0.01 / fp)
        peak = std::max(peak, std::abs(dgauss4_value(fp, t)));
    CHECK(peak <= 1.0 + 1e-12);
}

TEST_CASE("space_defaults covers the tuned orders only") {
    for (int k : {2, 4, 6, 8, 10}) {
        SpaceConfig c = space_defaults(k);
        CHECK(c.space_order == k);
        CHECK(c.hs.size() >= 3);
        // Receivers stay on grid nodes at every h of the sweep.
        for (double off : c.rec_offsets)
            for (double h : c.hs)
                CHECK(std::abs(off / h - std::round(off / h)) < 1e-12);
    }
    CHECK_THROWS_AS(space_defaults(3), ParameterError);
    CHECK_THROWS_AS(space_defaults(12), ParameterError);
}

TEST_CASE("adjoint dot test is at machine precision in 3-D") {
    AdjointConfig cfg;
    cfg.ndim = 3;
    cfg.n = 24;
    cfg.space_order = 6;
    cfg.tn = 150.0;
    AdjointReport r = adjoint_test(cfg);
    CHECK(r.forward_dot > 0.0);
    CHECK(r.rel_err <= 1e-12);
}

TEST_CASE("bench reports operational intensity growing with order") {
    BenchConfig cfg;
    cfg.orders = {2, 4, 8};
    cfg.n = 16;
    cfg.steps = 20;
    cfg.repeats = 1;
    BenchReport r = bench(cfg);
    REQUIRE(r.oi.size() == 3);
    CHECK(r.oi[0] > 0.0);
    CHECK(r.oi[0] < r.oi[1]);
    CHECK(r.oi[1] < r.oi[2]);
    CHECK(r.flops[0] < r.flops[2]);
    CHECK(r.wall_small > 0.0);
    CHECK(r.wall_big > 0.0);
}
