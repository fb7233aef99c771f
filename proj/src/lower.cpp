#include "sf/lower.hpp"

#include <algorithm>
#include <set>

#include "sf/derivative.hpp"
#include "sf/error.hpp"
#include "sf/passes.hpp"

namespace sf {
namespace {

long time_offset_of(const ExprNode& a) {
    for (const AccessIndex& ai : a.idx)
        if (ai.dim.kind == DimKind::Time) return ai.offset;
    return 0;
}

bool has_nonzero_space_offset(const ExprNode& a) {
    for (const AccessIndex& ai : a.idx)
        if (ai.dim.kind == DimKind::Space && ai.offset != 0) return true;
    return false;
}

bool has_time_index(const Expr& e) {
    std::vector<Expr> acc;
    collect_accesses(e, acc);
    for (const Expr& a : acc)
        for (const AccessIndex& ai : a->idx)
            if (ai.dim.kind == DimKind::Time) return true;
    return false;
}

struct EqInfo {
    Equation eq;
    bool sparse_loop = false;
    bool scatter = false;
    std::shared_ptr<const SparseFunction> points;
    Dim point_dim;
    long npoints = 0;
    std::shared_ptr<const Grid> grid;
    std::vector<long> margins;
    int dir_vote = 0;
};

EqInfo analyze(const Equation& raw) {
    EqInfo info;
    info.eq = expand_derivatives(raw);
    const Expr& lhs = info.eq.lhs;
    if (lhs->kind != ExprKind::Access || !lhs->fn)
        throw SchedulingError("assignment target must be a field access");

    std::vector<Expr> reads;
    collect_accesses(info.eq.rhs, reads);

    if (lhs->via_points) {
        info.sparse_loop = true;
        info.scatter = true;
        info.points = lhs->via_points;
        info.point_dim = info.points->point_dim();
        info.npoints = info.points->npoints();
        for (const Expr& a : reads)
            if (a->via_points && a->via_points != info.points)
                throw SchedulingError("one point equation mixes two point clouds");
    } else {
        const Dim* pd = nullptr;
        for (size_t d = 0; d < lhs->fn->dims().size(); ++d)
            if (lhs->fn->dims()[d].kind == DimKind::Point) {
                pd = &lhs->fn->dims()[d];
                info.npoints = lhs->fn->extents()[d];
            }
        if (pd) {
            info.sparse_loop = true;
            info.point_dim = *pd;
            for (const Expr& a : reads)
                if (a->via_points) {
                    if (info.points && info.points != a->via_points)
                        throw SchedulingError("one point equation mixes two point clouds");
                    info.points = a->via_points;
                }
            if (info.points && !(info.points->point_dim() == *pd))
                throw SchedulingError("point reads do not match the target's point dimension");
        } else {
            if (lhs->fn->space_rank() == 0)
                throw SchedulingError("assignment target has no iteration dimensions");
            info.grid = lhs->fn->grid();
            if (has_nonzero_space_offset(*lhs))
                throw SchedulingError("dense writes must target the loop point itself");
            info.margins = info.eq.margins;
            if (info.margins.empty()) info.margins.assign(info.grid->ndim(), 0);
            if (static_cast<int>(info.margins.size()) != info.grid->ndim())
                throw ParameterError("margin list rank does not match the grid");
            long wt = time_offset_of(*lhs);
            for (const Expr& a : reads) {
                if (a->via_points || !a->fn) continue;
                for (const AccessIndex& ai : a->idx)
                    if (ai.dim.kind == DimKind::Point)
                        throw SchedulingError("dense equation reads a point-indexed field");
                if (a->fn->space_rank() > 0 && a->fn->grid() != info.grid)
                    throw SchedulingError("equation mixes fields from different grids");
                if (a->fn == lhs->fn && time_offset_of(*a) == wt && has_nonzero_space_offset(*a))
                    throw SchedulingError(lhs->fn->name() +
                                          ": stencil reads the slot being written");
            }
        }
    }

    // Dense time-indexed writes fix the stepping direction.
    if (!lhs->via_points && lhs->fn->space_rank() > 0) {
        long off = time_offset_of(*lhs);
        if (off > 0) info.dir_vote = 1;
        if (off < 0) info.dir_vote = -1;
    } else if (lhs->via_points) {
        long off = time_offset_of(*lhs);
        if (off > 0) info.dir_vote = 1;
        if (off < 0) info.dir_vote = -1;
    }
    return info;
}

// Open cluster of equations sharing one loop nest.
struct Cluster {
    bool sparse_loop = false;
    bool scatter = false;
    std::shared_ptr<const SparseFunction> points;
    Dim point_dim;
    long npoints = 0;
    std::shared_ptr<const Grid> grid;
    std::vector<long> margins;
    std::vector<EqInfo> eqs;
    // (field, time offset) pairs for dependence splitting
    std::vector<std::pair<const FunctionBase*, long>> writes;
    std::vector<std::pair<const FunctionBase*, long>> offset_reads;
};

bool same_signature(const Cluster& c, const EqInfo& e) {
    if (c.sparse_loop != e.sparse_loop) return false;
    if (c.sparse_loop)
        return c.scatter == e.scatter && c.point_dim == e.point_dim &&
               (!c.points || !e.points || c.points == e.points);
    return c.grid == e.grid && c.margins == e.margins;
}

bool creates_dependence(const Cluster& c, const EqInfo& e) {
    if (c.sparse_loop) return false;
    std::vector<Expr> reads;
    collect_accesses(e.eq.rhs, reads);
    for (const Expr& a : reads) {
        if (a->via_points || !a->fn || !has_nonzero_space_offset(*a)) continue;
        for (const auto& [fn, off] : c.writes)
            if (fn == a->fn.get() && off == time_offset_of(*a)) return true;
    }
    const FunctionBase* wfn = e.eq.lhs->fn.get();
    long woff = time_offset_of(*e.eq.lhs);
    for (const auto& [fn, off] : c.offset_reads)
        if (fn == wfn && off == woff) return true;
    return false;
}

void absorb(Cluster& c, EqInfo e) {
    if (!c.sparse_loop) {
        c.writes.emplace_back(e.eq.lhs->fn.get(), time_offset_of(*e.eq.lhs));
        std::vector<Expr> reads;
        collect_accesses(e.eq.rhs, reads);
        for (const Expr& a : reads)
            if (!a->via_points && a->fn && has_nonzero_space_offset(*a))
                c.offset_reads.emplace_back(a->fn.get(), time_offset_of(*a));
    }
    if (!c.points && e.points) c.points = e.points;
    if (e.points && e.npoints) c.npoints = e.npoints;
    c.eqs.push_back(std::move(e));
}

Cluster open_cluster(const EqInfo& e) {
    Cluster c;
    c.sparse_loop = e.sparse_loop;
    c.scatter = e.scatter;
    c.points = nullptr;
    c.point_dim = e.point_dim;
    c.npoints = e.npoints;
    c.grid = e.grid;
    c.margins = e.margins;
    return c;
}

IRNode emit_cluster(const Cluster& c) {
    auto block = std::make_shared<AssignBlock>();
    block->points = c.points;
    for (const EqInfo& e : c.eqs)
        block->assigns.push_back({e.eq.lhs, e.eq.rhs, e.eq.accumulate});

    if (c.sparse_loop) {
        auto it = std::make_shared<Iteration>();
        it->dim = c.point_dim;
        it->kind = LoopKind::Point;
        it->lo = 0;
        it->hi = c.npoints;
        it->parallel = !c.scatter;
        it->body.push_back(make_block(block));
        return make_loop(it);
    }

    IRNode inner = make_block(block);
    for (int d = c.grid->ndim() - 1; d >= 0; --d) {
        auto it = std::make_shared<Iteration>();
        it->dim = c.grid->space_dim(d);
        it->kind = LoopKind::Space;
        it->lo = c.margins[d];
        it->hi = c.grid->shape()[d] - c.margins[d];
        it->parallel = true;
        it->vector = d == c.grid->ndim() - 1;
        it->body.push_back(std::move(inner));
        inner = make_loop(it);
    }
    return inner;
}

void register_field(Operator& op, const std::shared_ptr<const FunctionBase>& fn) {
    auto [it, inserted] = op.fields.emplace(fn->name(), fn);
    if (!inserted && it->second != fn)
        throw BindingError("two distinct fields share the name " + fn->name());
}

} // namespace

Operator lower(std::string name, const std::vector<Equation>& eqs) {
    if (eqs.empty()) throw ParameterError("operator needs at least one equation");
    Operator op;
    op.name = std::move(name);

    std::vector<EqInfo> infos;
    infos.reserve(eqs.size());
    int dir = 0;
    bool timed = false;
    for (const Equation& raw : eqs) {
        EqInfo info = analyze(raw);
        if (info.dir_vote) {
            if (dir && dir != info.dir_vote)
                throw SchedulingError("equations step time in conflicting directions");
            dir = info.dir_vote;
        }
        timed = timed || has_time_index(info.eq.lhs) || has_time_index(info.eq.rhs);
        infos.push_back(std::move(info));
    }
    op.has_time_loop = timed;
    op.time_dir = dir < 0 ? Direction::Backward : Direction::Forward;

    std::vector<IRNode> clusters;
    Cluster cur = open_cluster(infos[0]);
    absorb(cur, infos[0]);
    for (size_t i = 1; i < infos.size(); ++i) {
        if (same_signature(cur, infos[i]) && !creates_dependence(cur, infos[i])) {
            absorb(cur, infos[i]);
        } else {
            clusters.push_back(emit_cluster(cur));
            cur = open_cluster(infos[i]);
            absorb(cur, infos[i]);
        }
    }
    clusters.push_back(emit_cluster(cur));

    if (timed) {
        auto it = std::make_shared<Iteration>();
        it->dim = Grid::time_dim();
        it->kind = LoopKind::Time;
        it->dir = op.time_dir;
        it->runtime_bounds = true;
        it->body = std::move(clusters);
        op.roots.push_back(make_loop(it));
    } else {
        op.roots = std::move(clusters);
    }

    std::set<std::string> syms;
    for (const EqInfo& info : infos) {
        for (const Expr& side : {info.eq.lhs, info.eq.rhs}) {
            std::vector<Expr> acc;
            collect_accesses(side, acc);
            for (const Expr& a : acc) {
                register_field(op, a->fn);
                if (a->via_points) {
                    op.sparse.emplace(a->via_points->name(), a->via_points);
                    register_field(op, a->via_points->weight_table());
                }
            }
            std::vector<std::string> ss;
            collect_symbols(side, ss);
            syms.insert(ss.begin(), ss.end());
        }
        if (info.points) {
            op.sparse.emplace(info.points->name(), info.points);
            register_field(op, info.points->weight_table());
        }
    }
    op.symbols.assign(syms.begin(), syms.end());
    return op;
}

Operator compile(std::string name, const std::vector<Equation>& eqs,
                 const CompileOptions& opts) {
    Operator op = lower(std::move(name), eqs);
    if (opts.cse) cse(op);
    if (opts.factorize) factorize_weights(op);
    if (opts.hoist) hoist_invariants(op);
    if (!opts.tiles.empty()) block_loops(op, opts.tiles);
    op.autotune_pending = opts.autotune;
    refresh_metrics(op);
    return op;
}

} // namespace sf
