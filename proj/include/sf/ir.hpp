#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sf/expr.hpp"
#include "sf/function.hpp"
#include "sf/sparse.hpp"

namespace sf {

enum class LoopKind : unsigned char { Time, Space, Point };
enum class Direction : unsigned char { Forward, Backward };

// lhs is always an Access. accumulate means lhs += rhs.
struct Assignment {
    Expr lhs;
    Expr rhs;
    bool accumulate = false;
};

// Straight-line statements executed at one iteration point. temps are scalar
// definitions evaluated in order before the assignments; they must not read
// any field written by the assignments.
struct AssignBlock {
    std::vector<std::pair<std::string, Expr>> temps;
    std::vector<Assignment> assigns;
    // Non-null when the block indexes dense fields through point tables.
    std::shared_ptr<const SparseFunction> points;
};

struct Iteration;

// Exactly one of the two members is set.
struct IRNode {
    std::shared_ptr<Iteration> loop;
    std::shared_ptr<AssignBlock> block;
};

struct Iteration {
    Dim dim;
    LoopKind kind = LoopKind::Space;
    Direction dir = Direction::Forward;
    // Half-open interval [lo, hi); time loops take their bounds at run time.
    long lo = 0;
    long hi = 0;
    bool runtime_bounds = false;
    // Tile size for cache blocking; 0 leaves the loop untiled.
    long block = 0;
    bool parallel = false;
    bool vector = false;
    std::vector<IRNode> body;
};

// Compiled stencil program: an ordered loop tree plus everything needed to
// bind and run it.
struct Operator {
    std::string name;

    // Scalar definitions evaluated once per run, before any loop. Symbol-only.
    std::vector<std::pair<std::string, Expr>> pre_temps;
    // Loop nests run once before the main tree (precomputed arrays).
    std::vector<IRNode> prologue;
    std::vector<IRNode> roots;

    std::map<std::string, std::shared_ptr<const FunctionBase>> fields;
    std::map<std::string, std::shared_ptr<const SparseFunction>> sparse;
    // Scalar symbols that must be bound before running (grid spacings are
    // bound automatically from field grids).
    std::vector<std::string> symbols;

    bool has_time_loop = false;
    Direction time_dir = Direction::Forward;

    // Tile sizes chosen by a measurement run; empty until tuned.
    std::vector<long> autotuned_tiles;
    bool autotune_pending = false;

    // Recomputed after every pass pipeline run.
    struct Metrics {
        OpCount flops_per_point;
        double bytes_per_point = 0;
        double oi = 0;
    } metrics;

    // Deterministic text rendering of the whole tree; pinned in tests.
    std::string dump() const;
};

IRNode make_loop(std::shared_ptr<Iteration> it);
IRNode make_block(std::shared_ptr<AssignBlock> b);

// Applies fn to every AssignBlock in the subtree, in execution order.
template <class Nodes, class Fn>
void for_each_block(Nodes& nodes, Fn&& fn) {
    for (auto& n : nodes) {
        if (n.block) fn(*n.block);
        if (n.loop) for_each_block(n.loop->body, fn);
    }
}

} // namespace sf
