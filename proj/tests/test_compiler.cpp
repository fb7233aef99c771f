#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <thread>
#include <vector>

#include "sf/derivative.hpp"
#include "sf/execute.hpp"
#include "sf/function.hpp"
#include "sf/lower.hpp"
#include "sf/passes.hpp"
#include "sf/solve.hpp"
#include "sf/sparse.hpp"

using namespace sf;

namespace {

std::shared_ptr<Grid> grid2d(long nx = 6, long ny = 5, double h = 1.0) {
    return std::make_shared<Grid>(std::vector<long>{nx, ny}, std::vector<double>{h, h},
                                  std::vector<double>{0.0, 0.0});
}

std::shared_ptr<Grid> grid1d(long nx, double h = 1.0) {
    return std::make_shared<Grid>(std::vector<long>{nx}, std::vector<double>{h},
                                  std::vector<double>{0.0});
}

// The representative damped acoustic operator: dense update, source scatter,
// receiver gather, all inside one forward time loop.
struct AcousticCase {
    std::shared_ptr<Grid> g;
    std::shared_ptr<TimeFunction> u;
    std::shared_ptr<Function> m, damp;
    std::shared_ptr<SparseFunction> src, rec;
    std::vector<Equation> eqs;

    explicit AcousticCase(long n = 7, bool fill = false) {
        g = std::make_shared<Grid>(std::vector<long>{n, n}, std::vector<double>{10.0, 10.0},
                                   std::vector<double>{0.0, 0.0});
        u = TimeFunction::create("u", g, 4, 2);
        m = Function::create("m", g, 4);
        damp = Function::create("damp", g, 4);
        if (fill) {
            for (long i = 0; i < n; ++i)
                for (long j = 0; j < n; ++j) {
                    m->at({i, j}) = 0.25 + 0.001 * i;
                    damp->at({i, j}) = 0.01 * j;
                }
        }
        src = SparseFunction::create("src", g, {52.0, 49.0}, 8);
        src->locate();
        if (fill)
            for (long t = 0; t < 8; ++t) src->trace(t, 0) = std::sin(0.3 * t);
        rec = SparseFunction::create("rec", g, {15.0, 15.0, 55.0, 41.0}, 8);
        rec->locate();

        Equation pde(m->ref() * u->dt2() + damp->ref() * u->dt(2), u->laplace());
        eqs.emplace_back(u->forward(), solve_linear(pde, u->forward()));
        for (auto& e : src->inject(u->forward(), src->trace_at(0) * pow_int(symbol("dt"), 2) *
                                                     pow_int(m->ref(), -1)))
            eqs.push_back(e);
        eqs.push_back(rec->interpolate(u->ref()));
    }
};

const char* kGoldenAcoustic =
    R"(operator fwd
  fields: damp inv0 m rec rec_w src src_w u
  symbols: dt h_x h_y
  s0 := dt^(-1)
  s1 := dt^(-2)
  s2 := h_x^(-2)
  s3 := h_y^(-2)
  s4 := dt^2
  prologue:
    for x [0,7) parallel
      for y [0,7) parallel vector
        inv0[x, y] = (m[x, y]*s1 + 1/2*damp[x, y]*s0)^(-1)
  for t [runtime) forward
    for x [0,7) parallel block 4
      for y [0,7) parallel vector block 4
        u[t+1, x, y] = (-1)*((-1)*(((-5/2)*u[t, x, y] + (-1/12)*(u[t, x-2, y] + u[t, x+2, y]) + 4/3*(u[t, x-1, y] + u[t, x+1, y]))*s2 + ((-5/2)*u[t, x, y] + (-1/12)*(u[t, x, y-2] + u[t, x, y+2]) + 4/3*(u[t, x, y-1] + u[t, x, y+1]))*s3) + m[x, y]*(u[t-1, x, y] + (-2)*u[t, x, y])*s1 + (-1/2)*damp[x, y]*u[t-1, x, y]*s0)*inv0[x, y]
    for p_src [0,1)
      u[t+1, x(src), y(src)] += src[t, p]*src_w[p, 0]*s4*m[x(src), y(src)]^(-1)
      u[t+1, x(src)+1, y(src)] += src[t, p]*src_w[p, 1]*s4*m[x(src)+1, y(src)]^(-1)
      u[t+1, x(src), y(src)+1] += src[t, p]*src_w[p, 2]*s4*m[x(src), y(src)+1]^(-1)
      u[t+1, x(src)+1, y(src)+1] += src[t, p]*src_w[p, 3]*s4*m[x(src)+1, y(src)+1]^(-1)
    for p_rec [0,2) parallel
      rec[t, p] = rec_w[p, 0]*u[t, x(rec), y(rec)] + rec_w[p, 1]*u[t, x(rec)+1, y(rec)] + rec_w[p, 2]*u[t, x(rec), y(rec)+1] + rec_w[p, 3]*u[t, x(rec)+1, y(rec)+1]
)";

} // namespace

TEST_CASE("full pipeline reproduces the golden acoustic dump") {
    AcousticCase c;
    CompileOptions opts;
    opts.tiles = {4, 4};
    Operator op = compile("fwd", c.eqs, opts);
    CHECK(op.dump() == kGoldenAcoustic);
    CHECK(op.metrics.flops_per_point.total() == 29);
    CHECK(op.metrics.flops_per_point.adds == 12);
    CHECK(op.metrics.flops_per_point.muls == 17);
    CHECK(op.metrics.bytes_per_point == doctest::Approx(32.0));
    CHECK(op.metrics.oi == doctest::Approx(29.0 / 32.0));
}

TEST_CASE("lowering keeps equation list order inside the time loop") {
    AcousticCase c;
    Operator op = lower("fwd", c.eqs);
    std::string d = op.dump();
    auto update = d.find("u[t+1, x, y] =");
    auto scatter = d.find("for p_src");
    auto gather = d.find("for p_rec");
    REQUIRE(update != std::string::npos);
    REQUIRE(scatter != std::string::npos);
    REQUIRE(gather != std::string::npos);
    CHECK(update < scatter);
    CHECK(scatter < gather);
    CHECK(op.has_time_loop);
    CHECK(op.time_dir == Direction::Forward);
}

TEST_CASE("time-invariant equations lower to a pure spatial nest") {
    auto g = grid2d();
    auto f = Function::create("f", g, 2);
    auto out = Function::create("out", g, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(out->ref(), f->dx2(0) + f->dx2(1));
    Operator op = lower("lap", eqs);
    CHECK(!op.has_time_loop);
    REQUIRE(!op.roots.empty());
    REQUIRE(op.roots[0].loop);
    CHECK(op.roots[0].loop->kind == LoopKind::Space);
}

TEST_CASE("time direction is detected from the written slot") {
    auto g = grid2d();
    auto v = TimeFunction::create("v", g, 2, 2);
    SUBCASE("backward") {
        std::vector<Equation> eqs;
        eqs.emplace_back(v->backward(), v->ref() + rational(1));
        Operator op = lower("bwd", eqs);
        CHECK(op.time_dir == Direction::Backward);
        CHECK(op.dump().find("backward") != std::string::npos);
    }
    SUBCASE("mixed directions are rejected") {
        auto w = TimeFunction::create("w", g, 2, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(v->forward(), v->ref());
        eqs.emplace_back(w->backward(), w->ref());
        CHECK_THROWS_AS(lower("mix", eqs), SchedulingError);
    }
}

TEST_CASE("lowering rejects illegal equations") {
    auto g = grid2d();
    SUBCASE("reading the slot being written at an offset") {
        auto u = TimeFunction::create("u", g, 2, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(), u->at_offsets(1, {1, 0}));
        CHECK_THROWS_AS(lower("bad", eqs), SchedulingError);
    }
    SUBCASE("mixing fields from different grids") {
        auto g2 = grid2d(8, 9);
        auto a = Function::create("a", g, 2);
        auto b = Function::create("b", g2, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(a->ref(), b->ref() + rational(1));
        CHECK_THROWS_AS(lower("bad", eqs), SchedulingError);
    }
    SUBCASE("two fields sharing a name") {
        auto a1 = Function::create("a", g, 2);
        auto a2 = Function::create("a", g, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(a1->ref(), a2->ref() + rational(1));
        CHECK_THROWS_AS(lower("bad", eqs), BindingError);
    }
}

TEST_CASE("cse extracts repeated subtrees once") {
    auto g = grid2d();
    auto a = Function::create("a", g, 2);
    auto b = Function::create("b", g, 2);
    auto v = Function::create("v", g, 2);
    auto w = Function::create("w", g, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(v->ref(), (a->ref() + b->ref()) * rational(3));
    eqs.emplace_back(w->ref(), (a->ref() + b->ref()) * rational(5));
    Operator plain = lower("op", eqs);
    Operator opt = lower("op", eqs);
    cse(opt);
    long temps = 0;
    for_each_block(opt.roots, [&](const AssignBlock& blk) { temps += blk.temps.size(); });
    CHECK(temps == 1);
    CHECK(flop_count(opt).total() < flop_count(plain).total());
    CHECK(opt.dump().find("r0 := a[x, y] + b[x, y]") != std::string::npos);
}

TEST_CASE("factorization groups equal stencil weights") {
    auto g = grid1d(12);
    auto u = Function::create("u", g, 4);
    auto out = Function::create("out", g, 4);
    std::vector<Equation> eqs;
    eqs.emplace_back(out->ref(), u->dx2(0));
    Operator plain = lower("d2", eqs);
    Operator opt = lower("d2", eqs);
    factorize_weights(opt);
    OpCount before = flop_count(plain);
    OpCount after = flop_count(opt);
    CHECK(before.adds == after.adds);
    // the two symmetric weight pairs collapse to one multiply each
    CHECK(before.muls - after.muls == 2);
    CHECK(opt.dump().find("(u[x-2] + u[x+2])") != std::string::npos);
}

TEST_CASE("cse then factorize never increases the flop count") {
    auto g = std::make_shared<Grid>(std::vector<long>{12, 12, 12},
                                    std::vector<double>{10.0, 10.0, 10.0},
                                    std::vector<double>{0.0, 0.0, 0.0});
    auto u = TimeFunction::create("u", g, 8, 2);
    auto m = Function::create("m", g, 8);
    Equation pde(m->ref() * u->dt2(), u->laplace());
    std::vector<Equation> eqs;
    eqs.emplace_back(u->forward(), solve_linear(pde, u->forward()));
    Operator plain = lower("k", eqs);
    Operator opt = lower("k", eqs);
    cse(opt);
    factorize_weights(opt);
    CHECK(flop_count(opt).total() < flop_count(plain).total());
}

TEST_CASE("hoisting requires a time loop for array temporaries") {
    auto g = grid2d();
    auto f = Function::create("f", g, 2);
    auto out = Function::create("out", g, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(out->ref(), f->dx2(0) * pow_int(f->ref() + rational(1), -1));
    Operator op = lower("sp", eqs);
    hoist_invariants(op);
    CHECK(op.prologue.empty());
    CHECK(op.fields.count("inv0") == 0);
    // spacing powers still become scalar pre-temps
    CHECK(!op.pre_temps.empty());
}

TEST_CASE("blocking splits iteration without changing coverage") {
    SUBCASE("tile smaller than extent, with remainder") {
        auto g = grid1d(10);
        auto run_with = [&](std::vector<long> tiles) {
            auto u = Function::create("u", g, 2);
            for (long i = 0; i < 10; ++i) u->at({i}) = 0.5 * i;
            auto out = Function::create("out", g, 2);
            std::vector<Equation> eqs;
            eqs.emplace_back(out->ref(), u->ref() + rational(1));
            CompileOptions opts;
            opts.cse = opts.factorize = opts.hoist = false;
            opts.tiles = std::move(tiles);
            Operator op = compile("cp", eqs, opts);
            RunArgs a;
            run(op, a);
            return std::vector<double>(out->values(), out->values() + out->storage_size());
        };
        auto base = run_with({});
        auto tiled = run_with({4});
        CHECK(base == tiled);
        auto wide = run_with({64});
        CHECK(base == wide);
    }
    SUBCASE("tile annotation appears in the dump") {
        auto g = grid1d(10);
        auto u = Function::create("u", g, 2);
        auto out = Function::create("out", g, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(out->ref(), u->ref());
        Operator op = lower("cp", eqs);
        block_loops(op, {4});
        CHECK(op.dump().find("block 4") != std::string::npos);
    }
    SUBCASE("non-positive tiles are rejected") {
        auto g = grid1d(10);
        auto u = Function::create("u", g, 2);
        auto out = Function::create("out", g, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(out->ref(), u->ref());
        Operator op = lower("cp", eqs);
        CHECK_THROWS_AS(block_loops(op, {0}), ParameterError);
        CHECK_THROWS_AS(block_loops(op, {4, -1}), ParameterError);
    }
}

TEST_CASE("dense updates write the interior and leave halos zero") {
    auto g = grid2d();
    auto f = Function::create("f", g, 4);
    std::vector<Equation> eqs;
    eqs.emplace_back(f->ref(), rational(7));
    Operator op = lower("fill", eqs);
    RunArgs a;
    run(op, a);
    CHECK(f->at({0, 0}) == 7.0);
    CHECK(f->at({5, 4}) == 7.0);
    CHECK(f->at({-1, 0}) == 0.0);
    CHECK(f->at({0, -2}) == 0.0);
    CHECK(f->at({5, 6}) == 0.0);
}

TEST_CASE("buffered time axes wrap modulo the slot count") {
    auto g = grid2d();
    auto u = TimeFunction::create("u", g, 2, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(u->forward(), u->ref() + rational(1));
    Operator op = lower("step", eqs);
    RunArgs a;
    a.t_from = 0;
    a.t_to = 5;
    ExecutionReport rep = run(op, a);
    CHECK(rep.steps == 5);
    CHECK(u->at({5 % 3, 2, 2}) == 5.0);
    CHECK(u->at({4 % 3, 2, 2}) == 4.0);
}

TEST_CASE("saved time axes index directly and are bounds-checked") {
    auto g = grid2d();
    SUBCASE("forward fill") {
        auto u = TimeFunction::create("us", g, 2, 2, 6);
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(), u->ref() + rational(2));
        Operator op = lower("saved", eqs);
        RunArgs a;
        a.t_from = 0;
        a.t_to = 5;
        run(op, a);
        for (long t = 0; t <= 5; ++t) CHECK(u->at({t, 1, 1}) == 2.0 * t);
    }
    SUBCASE("out-of-range slot") {
        auto v = TimeFunction::create("vs", g, 2, 2, 6);
        std::vector<Equation> eqs;
        eqs.emplace_back(v->backward(), v->ref() + rational(1));
        Operator op = lower("back", eqs);
        RunArgs a;
        a.t_from = 0;
        a.t_to = 6;
        CHECK_THROWS_AS(run(op, a), ParameterError);
    }
}

TEST_CASE("backward operators iterate the window in reverse") {
    auto g = grid2d();
    auto v = TimeFunction::create("v", g, 2, 2, 6);
    std::vector<Equation> eqs;
    eqs.emplace_back(v->backward(), v->ref() + rational(1));
    Operator op = lower("back", eqs);
    RunArgs a;
    a.t_from = 1;
    a.t_to = 6;
    run(op, a);
    CHECK(v->at({0, 3, 3}) == 5.0);
    CHECK(v->at({4, 3, 3}) == 1.0);
}

TEST_CASE("scalar symbols bind at run time, spacings automatically") {
    auto g = grid2d(6, 5, 2.5);
    auto f = Function::create("fb", g, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(f->ref(), symbol("alpha") * symbol(g->spacing_symbol(0)));
    Operator op = lower("bind", eqs);
    RunArgs a;
    a.bind.set("alpha", 2.0);
    run(op, a);
    CHECK(f->at({2, 2}) == 5.0);
    RunArgs missing;
    CHECK_THROWS_AS(run(op, missing), BindingError);
}

TEST_CASE("stencils evaluate exactly on polynomial data") {
    auto g = grid2d();
    auto f = Function::create("q", g, 2);
    for (long i = 0; i < 6; ++i)
        for (long j = 0; j < 5; ++j) f->at({i, j}) = double(i * i);
    auto out = Function::create("qo", g, 2);
    std::vector<Equation> eqs;
    eqs.emplace_back(out->ref(), f->dx2(0));
    Operator op = lower("lap", eqs);
    RunArgs a;
    run(op, a);
    CHECK(out->at({2, 2}) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(std::isfinite(out->at({0, 2})));
}

TEST_CASE("injection spreads the bilinear corner weights") {
    auto g = grid2d();
    auto u = TimeFunction::create("ui", g, 2, 2);
    auto src = SparseFunction::create("s1", g, {2.25, 1.75}, 3);
    src->locate();
    for (long t = 0; t < 3; ++t) src->trace(t, 0) = 10.0;
    std::vector<Equation> eqs;
    eqs.emplace_back(u->forward(), u->ref());
    for (auto& e : src->inject(u->forward(), src->trace_at(0))) eqs.push_back(e);
    Operator op = lower("inj", eqs);
    RunArgs a;
    run(op, a);
    CHECK(u->at({1, 2, 1}) == doctest::Approx(10.0 * 0.75 * 0.25).epsilon(1e-15));
    CHECK(u->at({1, 3, 1}) == doctest::Approx(10.0 * 0.25 * 0.25).epsilon(1e-15));
    CHECK(u->at({1, 2, 2}) == doctest::Approx(10.0 * 0.75 * 0.75).epsilon(1e-15));
    CHECK(u->at({1, 3, 2}) == doctest::Approx(10.0 * 0.25 * 0.75).epsilon(1e-15));
}

TEST_CASE("interpolation reproduces linear fields exactly") {
    auto g = grid2d();
    auto f = Function::create("lin", g, 2);
    for (long i = 0; i < 6; ++i)
        for (long j = 0; j < 5; ++j) f->at({i, j}) = 3.0 + 2.0 * i - 1.5 * j;
    auto rec = SparseFunction::create("r1", g, {2.25, 1.75, 4.5, 3.5}, 2);
    rec->locate();
    std::vector<Equation> eqs;
    eqs.push_back(rec->interpolate(f->ref()));
    Operator op = lower("gather", eqs);
    RunArgs a;
    run(op, a);
    CHECK(rec->trace(0, 0) == doctest::Approx(3.0 + 2.0 * 2.25 - 1.5 * 1.75).epsilon(1e-14));
    CHECK(rec->trace(0, 1) == doctest::Approx(3.0 + 2.0 * 4.5 - 1.5 * 3.5).epsilon(1e-14));
}

TEST_CASE("interpolation and injection assemble exactly transposed matrices") {
    auto g = grid2d(5, 5);
    std::vector<double> coords = {1.3, 2.7, 2.0, 2.0, 3.9, 3.9};
    long npts = 3, nx = 5, ny = 5;

    // gather matrix: response of each trace to a unit field at one node
    std::vector<double> G(npts * nx * ny, 0.0);
    {
        auto f = Function::create("gf", g, 2);
        auto rec = SparseFunction::create("gr", g, coords, 1);
        rec->locate();
        std::vector<Equation> eqs;
        eqs.push_back(rec->interpolate(f->ref()));
        Operator op = lower("g", eqs);
        for (long i = 0; i < nx; ++i)
            for (long j = 0; j < ny; ++j) {
                for (size_t k = 0; k < f->storage_size(); ++k) f->values()[k] = 0.0;
                f->at({i, j}) = 1.0;
                RunArgs a;
                run(op, a);
                for (long p = 0; p < npts; ++p) G[(p * nx + i) * ny + j] = rec->trace(0, p);
            }
    }

    // scatter matrix: field written by a unit value at one point
    std::vector<double> S(npts * nx * ny, 0.0);
    {
        auto f = Function::create("sf", g, 2);
        auto src = SparseFunction::create("ss", g, coords, 1);
        src->locate();
        std::vector<Equation> eqs;
        for (auto& e : src->inject(f->ref(), src->trace_at(0))) eqs.push_back(e);
        Operator op = lower("s", eqs);
        for (long p = 0; p < npts; ++p) {
            for (size_t k = 0; k < f->storage_size(); ++k) f->values()[k] = 0.0;
            for (long q = 0; q < npts; ++q) src->trace(0, q) = q == p ? 1.0 : 0.0;
            RunArgs a;
            run(op, a);
            for (long i = 0; i < nx; ++i)
                for (long j = 0; j < ny; ++j) S[(p * nx + i) * ny + j] = f->at({i, j});
        }
    }

    for (size_t k = 0; k < G.size(); ++k) CHECK(G[k] == S[k]);
}

TEST_CASE("optimization passes preserve results on the acoustic operator") {
    auto run_case = [](const CompileOptions& opts, bool tune) {
        AcousticCase c(11, true);
        Operator op = compile("fwd", c.eqs, opts);
        RunArgs a;
        a.t_from = 0;
        a.t_to = 7;
        a.bind.set("dt", 1.0);
        if (tune) {
            std::vector<std::vector<long>> cands = {{}, {4, 4}, {8, 8}};
            autotune(op, cands, 2, a);
        }
        run(op, a);
        std::vector<double> out;
        for (long t = 0; t < 8; ++t)
            for (long p = 0; p < 2; ++p) out.push_back(c.rec->trace(t, p));
        for (long i = 0; i < 11; ++i)
            for (long j = 0; j < 11; ++j) out.push_back(c.u->at({7 % 3, i, j}));
        return out;
    };
    CompileOptions off;
    off.cse = off.factorize = off.hoist = false;
    auto base = run_case(off, false);
    double biggest = 0;
    for (double v : base) biggest = std::max(biggest, std::abs(v));
    REQUIRE(biggest > 1e-6);

    SUBCASE("cse is bitwise") {
        CompileOptions c;
        c.cse = true;
        c.factorize = c.hoist = false;
        CHECK(run_case(c, false) == base);
    }
    SUBCASE("hoist is bitwise") {
        CompileOptions c;
        c.cse = c.factorize = false;
        c.hoist = true;
        CHECK(run_case(c, false) == base);
    }
    SUBCASE("blocking is bitwise") {
        CompileOptions c;
        c.cse = c.factorize = c.hoist = false;
        c.tiles = {4, 4};
        CHECK(run_case(c, false) == base);
    }
    SUBCASE("factorization stays within 1e-12") {
        CompileOptions c;
        c.cse = c.hoist = false;
        c.factorize = true;
        auto r = run_case(c, false);
        double rel = 0;
        for (size_t i = 0; i < base.size(); ++i)
            rel = std::max(rel, std::abs(r[i] - base[i]) / std::max(1.0, std::abs(base[i])));
        CHECK(rel < 1e-12);
    }
    SUBCASE("the full pipeline with autotuning stays within 1e-12") {
        CompileOptions c;
        auto r = run_case(c, true);
        double rel = 0;
        for (size_t i = 0; i < base.size(); ++i)
            rel = std::max(rel, std::abs(r[i] - base[i]) / std::max(1.0, std::abs(base[i])));
        CHECK(rel < 1e-12);
    }
}

TEST_CASE("multithreaded execution is bitwise deterministic") {
    auto g = grid2d();
    auto u = TimeFunction::create("ut", g, 4, 2);
    auto run_with = [&](int nth) {
        for (size_t i = 0; i < u->storage_size(); ++i) u->values()[i] = 0.0;
        u->at({0, 3, 2}) = 1.0;
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(), u->ref() + rational(1, 100) * u->laplace());
        Operator op = lower("diff", eqs);
        RunArgs a;
        a.t_from = 0;
        a.t_to = 6;
        a.nthreads = nth;
        run(op, a);
        return std::vector<double>(u->values(), u->values() + u->storage_size());
    };
    auto s1 = run_with(1);
    auto s2 = run_with(2);
    auto s4 = run_with(4);
    CHECK(s1 == s2);
    CHECK(s1 == s4);
}

TEST_CASE("distinct operators execute concurrently") {
    auto g = grid2d();
    auto u1 = TimeFunction::create("c1", g, 2, 2);
    auto u2 = TimeFunction::create("c2", g, 2, 2);
    auto build = [](const std::shared_ptr<TimeFunction>& u, long inc) {
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(), u->ref() + rational(inc));
        return lower("conc", eqs);
    };
    Operator a = build(u1, 1), b = build(u2, 3);
    RunArgs ra;
    ra.t_from = 0;
    ra.t_to = 30;
    std::thread ta([&] { run(a, ra); });
    std::thread tb([&] { run(b, ra); });
    ta.join();
    tb.join();
    CHECK(u1->at({30 % 3, 2, 2}) == 30.0);
    CHECK(u2->at({30 % 3, 2, 2}) == 90.0);
}

TEST_CASE("non-finite fields raise a stability error") {
    auto g = grid2d();
    auto u = TimeFunction::create("ub", g, 2, 2);
    u->at({0, 2, 2}) = 1.0;
    std::vector<Equation> eqs;
    eqs.emplace_back(u->forward(), u->ref() * symbol("big"));
    Operator op = lower("blow", eqs);
    RunArgs a;
    a.t_from = 0;
    a.t_to = 4;
    a.bind.set("big", 1e200);
    CHECK_THROWS_AS(run(op, a), StabilityError);
}

TEST_CASE("single precision execution stays close to double") {
    auto g = grid2d();
    auto u = TimeFunction::create("up", g, 2, 2);
    auto run_with = [&](Precision p) {
        for (size_t i = 0; i < u->storage_size(); ++i) u->values()[i] = 0.0;
        u->at({0, 3, 2}) = 1.0;
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(), u->ref() + rational(1, 3) * u->laplace());
        Operator op = lower("diff", eqs);
        RunArgs a;
        a.t_from = 0;
        a.t_to = 4;
        a.precision = p;
        run(op, a);
        return std::vector<double>(u->values(), u->values() + u->storage_size());
    };
    auto d = run_with(Precision::F64);
    auto s = run_with(Precision::F32);
    double rel = 0;
    for (size_t i = 0; i < d.size(); ++i) rel = std::max(rel, std::abs(d[i] - s[i]));
    CHECK(rel < 1e-4);
    CHECK(rel >= 0.0);
}

TEST_CASE("autotune validates input and restores field state") {
    AcousticCase c(11, true);
    CompileOptions opts;
    Operator op = compile("fwd", c.eqs, opts);
    RunArgs a;
    a.t_from = 0;
    a.t_to = 7;
    a.bind.set("dt", 1.0);
    SUBCASE("empty candidate list") {
        CHECK_THROWS_AS(autotune(op, {}, 2, a), ParameterError);
    }
    SUBCASE("non-positive trial steps") {
        std::vector<std::vector<long>> cands = {{}, {4, 4}};
        CHECK_THROWS_AS(autotune(op, cands, 0, a), ParameterError);
    }
    SUBCASE("state restoration and application") {
        std::vector<double> before(c.u->values(), c.u->values() + c.u->storage_size());
        std::vector<std::vector<long>> cands = {{}, {4, 4}, {8, 8}};
        std::vector<long> pick = autotune(op, cands, 3, a);
        std::vector<double> after(c.u->values(), c.u->values() + c.u->storage_size());
        CHECK(before == after);
        bool known = false;
        for (const auto& cand : cands) known |= cand == pick;
        CHECK(known);
        CHECK(op.autotuned_tiles == pick);
    }
}

TEST_CASE("operational intensity grows with the space order") {
    auto make = [](int order) {
        auto g = std::make_shared<Grid>(std::vector<long>{32, 32},
                                        std::vector<double>{10.0, 10.0},
                                        std::vector<double>{0.0, 0.0});
        auto u = TimeFunction::create("u", g, order, 2);
        std::vector<Equation> eqs;
        eqs.emplace_back(u->forward(),
                         rational(2) * u->ref() + rational(-1) * u->at_offsets(-1, {0, 0}) +
                             symbol("c") * u->laplace());
        CompileOptions opts;
        return compile("lap", eqs, opts);
    };
    double prev = 0.0;
    for (int order : {2, 4, 6, 8}) {
        Operator op = make(order);
        CHECK(op.metrics.oi > prev);
        prev = op.metrics.oi;
        CHECK(op.metrics.bytes_per_point == doctest::Approx(8.0));
    }
}

TEST_CASE("metrics are recomputed for each pass pipeline") {
    AcousticCase c;
    CompileOptions off;
    off.cse = off.factorize = off.hoist = false;
    Operator plain = compile("fwd", c.eqs, off);
    CompileOptions on;
    Operator opt = compile("fwd", c.eqs, on);
    CHECK(plain.metrics.flops_per_point.total() == 48);
    CHECK(opt.metrics.flops_per_point.total() == 29);
    CHECK(plain.metrics.flops_per_point.total() == flop_count(plain).total());
    CHECK(opt.metrics.flops_per_point.total() == flop_count(opt).total());
}
