#pragma once

#include <map>
#include <string>
#include <vector>

#include "sf/ir.hpp"

namespace sf {

// f64 is the default and is required by the verification suite; f32 trades
// accuracy for speed in performance runs.
enum class Precision : unsigned char { F64, F32 };

// Auto prefers the emitted-C backend and falls back to the interpreter when
// no host compiler is available.
enum class Backend { Interpreter, Emitted, Auto };

struct Bindings {
    std::map<std::string, double> scalars;

    Bindings& set(const std::string& name, double v) {
        scalars[name] = v;
        return *this;
    }
};

struct RunArgs {
    // Time loop bounds [t_from, t_to); ignored by operators without a time
    // loop. Backward operators iterate the same window in reverse.
    long t_from = 0;
    long t_to = 1;
    Bindings bind;
    int nthreads = 1;
    // Scan stepped fields for non-finite values (StabilityError).
    bool check_finite = true;
    Precision precision = Precision::F64;
};

struct ExecutionReport {
    double seconds = 0.0;
    long long flops = 0;
    double gflops = 0.0;
    long steps = 0;
    std::vector<long> tiles;
};

// Interprets the operator's loop tree against its bound fields. Grid spacing
// symbols (h_x, ...) are bound automatically; all other symbols must appear
// in args.bind.
ExecutionReport run(Operator& op, const RunArgs& args);

// Times trial_steps of each candidate tiling on scratch copies of the bound
// fields, restores the fields, applies the fastest candidate to op (first
// seen wins ties) and returns it. An empty candidate means untiled.
std::vector<long> autotune(Operator& op, const std::vector<std::vector<long>>& candidates,
                           long trial_steps, const RunArgs& args);

} // namespace sf
