#pragma once

#include <string>
#include <vector>

#include "sf/equation.hpp"
#include "sf/ir.hpp"

namespace sf {

struct CompileOptions {
    bool cse = true;
    bool factorize = true;
    bool hoist = true;
    // Per-dim tile sizes for cache blocking; empty leaves loops untiled.
    std::vector<long> tiles;
    // Measure candidate tilings on the first run and keep the fastest.
    bool autotune = false;
};

// Expands derivatives, checks scheduling legality, clusters equations into
// loop nests and wraps them in a time loop when any equation steps in time.
//
// Equation order is preserved: clusters execute in sequence within one time
// iteration. A new cluster starts whenever the iteration signature changes
// (dense grid + margins vs point cloud) or a later equation reads, at a
// nonzero space offset, a value the current cluster writes at the same time
// offset.
Operator lower(std::string name, const std::vector<Equation>& eqs);

// lower + the optimization pipeline selected by options.
Operator compile(std::string name, const std::vector<Equation>& eqs,
                 const CompileOptions& opts = {});

} // namespace sf
