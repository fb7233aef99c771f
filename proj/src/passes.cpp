#include "sf/passes.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sf/error.hpp"

namespace sf {
namespace {

bool reads_any(const Expr& e, const std::set<const FunctionBase*>& fns) {
    std::vector<Expr> acc;
    collect_accesses(e, acc);
    for (const Expr& a : acc)
        if (fns.count(a->fn.get())) return true;
    return false;
}

void count_subtrees(const Expr& e, std::map<Expr, long, ExprLess>& count) {
    if (e->kids.empty()) return;
    ++count[e];
    for (const Expr& k : e->kids) count_subtrees(k, count);
}

void cse_block(AssignBlock& b, long& counter) {
    std::set<const FunctionBase*> written;
    for (const Assignment& a : b.assigns) written.insert(a.lhs->fn.get());

    std::map<Expr, long, ExprLess> count;
    for (const Assignment& a : b.assigns) count_subtrees(a.rhs, count);

    std::vector<Expr> candidates;
    for (const auto& [e, n] : count) {
        if (n < 2) continue;
        if (count_ops(e).total() == 0) continue;
        if (reads_any(e, written)) continue;
        candidates.push_back(e);
    }
    if (candidates.empty()) return;
    // smaller subtrees first, so larger temp definitions reuse them
    std::stable_sort(candidates.begin(), candidates.end(), [](const Expr& a, const Expr& b) {
        long oa = count_ops(a).total(), ob = count_ops(b).total();
        if (oa != ob) return oa < ob;
        return compare(a, b) < 0;
    });

    std::map<Expr, Expr, ExprLess> mapping;
    for (const Expr& c : candidates) {
        std::string name = "r" + std::to_string(counter++);
        Expr def = substitute(c, mapping);
        b.temps.emplace_back(name, def);
        mapping.emplace(c, symbol(name));
    }
    for (Assignment& a : b.assigns) a.rhs = substitute(a.rhs, mapping);
}

// (rational coefficient, remaining factors) of a product term
std::pair<Rational, Expr> split_rational(const Expr& term) {
    if (term->kind != ExprKind::Mul) return {Rational(1), term};
    Rational coeff = 1;
    std::vector<Expr> rest;
    for (const Expr& k : term->kids) {
        if (k->kind == ExprKind::RationalC)
            coeff *= k->rat;
        else
            rest.push_back(k);
    }
    if (coeff == 1 || rest.empty()) return {Rational(1), term};
    Expr core = rest.size() == 1 ? rest[0] : make_mul(std::move(rest));
    return {coeff, core};
}

Expr factorize_expr(const Expr& e) {
    if (e->kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const Expr& k : e->kids) {
        Expr r = factorize_expr(k);
        changed |= r != k;
        kids.push_back(std::move(r));
    }
    Expr base = e;
    if (changed) {
        switch (e->kind) {
        case ExprKind::Add: base = make_add(std::move(kids)); break;
        case ExprKind::Mul: base = make_mul(std::move(kids)); break;
        case ExprKind::Pow: base = make_pow(kids[0], kids[1]); break;
        default: return e;
        }
    }
    if (base->kind != ExprKind::Add) return base;

    struct Group {
        std::vector<Expr> cores;
        std::vector<Expr> terms;
    };
    std::map<Rational, Group> groups;
    for (const Expr& t : base->kids) {
        auto [coeff, core] = split_rational(t);
        Group& g = groups[coeff];
        g.cores.push_back(core);
        g.terms.push_back(t);
    }
    bool grouped = false;
    for (const auto& [coeff, g] : groups)
        if (coeff != 1 && g.cores.size() >= 2) grouped = true;
    if (!grouped) return base;

    std::vector<Expr> out;
    for (auto& [coeff, g] : groups) {
        if (coeff != 1 && g.cores.size() >= 2)
            out.push_back(make_mul({rational(coeff), make_add(std::move(g.cores))}));
        else
            for (Expr& t : g.terms) out.push_back(std::move(t));
    }
    return out.size() == 1 ? out[0] : make_add(std::move(out));
}

struct HoistContext {
    Operator* op = nullptr;
    std::set<const FunctionBase*> written;
    std::map<Expr, Expr, ExprLess> scalar_done;
    std::map<Expr, Expr, ExprLess> array_done;
    // one prologue assignment list per grid
    std::map<const Grid*, std::pair<std::shared_ptr<const Grid>, std::vector<Assignment>>> pro;
    long scalar_counter = 0;
    long array_counter = 0;
};

enum class Variance { Variant, Scalar, ZeroOffsetField, OffsetField };

Variance classify(const Expr& e, const HoistContext& cx) {
    std::vector<Expr> acc;
    collect_accesses(e, acc);
    bool offset = false;
    for (const Expr& a : acc) {
        if (a->via_points) return Variance::Variant;
        if (cx.written.count(a->fn.get())) return Variance::Variant;
        for (const AccessIndex& ai : a->idx) {
            if (ai.dim.kind == DimKind::Time) return Variance::Variant;
            if (ai.dim.kind == DimKind::Point) return Variance::Variant;
            if (ai.dim.kind == DimKind::Space && ai.offset != 0) offset = true;
        }
    }
    if (acc.empty()) return Variance::Scalar;
    return offset ? Variance::OffsetField : Variance::ZeroOffsetField;
}

// Hoisted definitions leave the block, so they are emitted in closed form:
// block-local temp symbols are expanded through `closures` before
// classification and before the definition is stored.
Expr hoist_expr(const Expr& e, const std::map<Expr, Expr, ExprLess>& closures,
                HoistContext& cx, bool arrays_allowed) {
    if (e->kids.empty()) return e;
    Expr closed = closures.empty() ? e : substitute(e, closures);
    Variance v = classify(closed, cx);
    if (v == Variance::Scalar && count_ops(closed).total() > 0) {
        auto it = cx.scalar_done.find(closed);
        if (it != cx.scalar_done.end()) return it->second;
        std::string name = "s" + std::to_string(cx.scalar_counter++);
        cx.op->pre_temps.emplace_back(name, closed);
        Expr rep = symbol(name);
        cx.scalar_done.emplace(closed, rep);
        return rep;
    }
    if (v == Variance::ZeroOffsetField && arrays_allowed && count_ops(closed).total() > 0) {
        auto it = cx.array_done.find(closed);
        if (it != cx.array_done.end()) return it->second;
        std::vector<Expr> acc;
        collect_accesses(closed, acc);
        const std::shared_ptr<const Grid>& grid = acc[0]->fn->grid();
        std::string name = "inv" + std::to_string(cx.array_counter++);
        auto fld = RawField::create(name, grid, grid->space_dims(), grid->shape(),
                                    std::vector<long>(grid->ndim(), 0));
        cx.op->fields.emplace(name, fld);
        Expr lhs = fld->ref();
        cx.pro[grid.get()].first = grid;
        cx.pro[grid.get()].second.push_back({lhs, closed, false});
        cx.array_done.emplace(closed, lhs);
        return lhs;
    }
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const Expr& k : e->kids) {
        Expr r = hoist_expr(k, closures, cx, arrays_allowed);
        changed |= r != k;
        kids.push_back(std::move(r));
    }
    if (!changed) return e;
    switch (e->kind) {
    case ExprKind::Add: return make_add(std::move(kids));
    case ExprKind::Mul: return make_mul(std::move(kids));
    case ExprKind::Pow: return make_pow(kids[0], kids[1]);
    default: return e;
    }
}

// Hoisting can reduce a temp to a bare symbol or leave it unused; inline the
// aliases and drop dead temps so blocks stay minimal.
void cleanup_temps(AssignBlock& b) {
    std::map<Expr, Expr, ExprLess> alias;
    std::vector<std::pair<std::string, Expr>> kept;
    for (auto& [name, def] : b.temps) {
        Expr d = alias.empty() ? def : substitute(def, alias);
        if (d->kids.empty())
            alias.emplace(symbol(name), d);
        else
            kept.emplace_back(name, d);
    }
    if (!alias.empty())
        for (Assignment& a : b.assigns) a.rhs = substitute(a.rhs, alias);
    for (size_t i = kept.size(); i-- > 0;) {
        std::vector<std::string> used;
        for (size_t j = i + 1; j < kept.size(); ++j) collect_symbols(kept[j].second, used);
        for (const Assignment& a : b.assigns) collect_symbols(a.rhs, used);
        if (std::find(used.begin(), used.end(), kept[i].first) == used.end())
            kept.erase(kept.begin() + static_cast<long>(i));
    }
    b.temps = std::move(kept);
}

void block_nest(std::vector<IRNode>& nodes, const std::vector<long>& tiles, size_t depth) {
    for (IRNode& n : nodes) {
        if (!n.loop) continue;
        if (n.loop->kind != LoopKind::Space) {
            block_nest(n.loop->body, tiles, depth);
            continue;
        }
        if (depth < tiles.size()) n.loop->block = tiles[depth];
        block_nest(n.loop->body, tiles, depth + 1);
    }
}

OpCount block_ops(const AssignBlock& b) {
    OpCount c;
    for (const auto& [name, e] : b.temps) {
        OpCount t = count_ops(e);
        c.adds += t.adds;
        c.muls += t.muls;
    }
    for (const Assignment& a : b.assigns) {
        OpCount t = count_ops(a.rhs);
        c.adds += t.adds + (a.accumulate ? 1 : 0);
        c.muls += t.muls;
    }
    return c;
}

} // namespace

void cse(Operator& op) {
    long counter = 0;
    for_each_block(op.roots, [&](AssignBlock& b) { cse_block(b, counter); });
}

void factorize_weights(Operator& op) {
    auto apply = [](AssignBlock& b) {
        for (auto& [name, e] : b.temps) e = factorize_expr(e);
        for (Assignment& a : b.assigns) a.rhs = factorize_expr(a.rhs);
    };
    for_each_block(op.prologue, apply);
    for_each_block(op.roots, apply);
}

void hoist_invariants(Operator& op) {
    HoistContext cx;
    cx.op = &op;
    for_each_block(op.prologue, [&](AssignBlock& b) {
        for (const Assignment& a : b.assigns) cx.written.insert(a.lhs->fn.get());
    });
    for_each_block(op.roots, [&](AssignBlock& b) {
        for (const Assignment& a : b.assigns) cx.written.insert(a.lhs->fn.get());
    });
    cx.scalar_counter = static_cast<long>(op.pre_temps.size());

    const std::map<Expr, Expr, ExprLess> no_closures;
    for_each_block(op.roots, [&](AssignBlock& b) {
        // arrays only pay off for dense blocks inside the time loop
        bool arrays = !b.points && op.has_time_loop;
        std::map<Expr, Expr, ExprLess> closures;
        for (const auto& [name, def] : b.temps)
            closures.emplace(symbol(name), closures.empty() ? def : substitute(def, closures));
        for (auto& [name, e] : b.temps) e = hoist_expr(e, closures, cx, arrays);
        for (Assignment& a : b.assigns) a.rhs = hoist_expr(a.rhs, closures, cx, arrays);
        cleanup_temps(b);
    });

    for (auto& [gptr, entry] : cx.pro) {
        auto& [grid, assigns] = entry;
        for (Assignment& a : assigns) a.rhs = hoist_expr(a.rhs, no_closures, cx, false);
        auto block = std::make_shared<AssignBlock>();
        block->assigns = std::move(assigns);
        IRNode inner = make_block(block);
        for (int d = grid->ndim() - 1; d >= 0; --d) {
            auto it = std::make_shared<Iteration>();
            it->dim = grid->space_dim(d);
            it->kind = LoopKind::Space;
            it->lo = 0;
            it->hi = grid->shape()[d];
            it->parallel = true;
            it->vector = d == grid->ndim() - 1;
            it->body.push_back(std::move(inner));
            inner = make_loop(it);
        }
        op.prologue.push_back(std::move(inner));
    }
}

void block_loops(Operator& op, const std::vector<long>& tiles) {
    for (long t : tiles)
        if (t < 1) throw ParameterError("tile sizes must be >= 1");
    block_nest(op.roots, tiles, 0);
}

OpCount flop_count(const Operator& op) {
    OpCount total;
    for_each_block(op.roots, [&](const AssignBlock& b) {
        if (b.points) return;
        OpCount c = block_ops(b);
        total.adds += c.adds;
        total.muls += c.muls;
    });
    return total;
}

double oi_estimate(const Operator& op) {
    std::set<const FunctionBase*> touched;
    for_each_block(op.roots, [&](const AssignBlock& b) {
        if (b.points) return;
        for (const auto& [name, e] : b.temps) {
            std::vector<Expr> acc;
            collect_accesses(e, acc);
            for (const Expr& a : acc) touched.insert(a->fn.get());
        }
        for (const Assignment& a : b.assigns) {
            std::vector<Expr> acc;
            collect_accesses(a.rhs, acc);
            acc.push_back(a.lhs);
            for (const Expr& x : acc) touched.insert(x->fn.get());
        }
    });
    if (touched.empty()) return 0.0;
    OpCount f = flop_count(op);
    return static_cast<double>(f.total()) / (8.0 * static_cast<double>(touched.size()));
}

void refresh_metrics(Operator& op) {
    op.metrics.flops_per_point = flop_count(op);
    double oi = oi_estimate(op);
    op.metrics.oi = oi;
    op.metrics.bytes_per_point =
        oi > 0 ? static_cast<double>(op.metrics.flops_per_point.total()) / oi : 0.0;
}

} // namespace sf
