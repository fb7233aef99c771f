#include "sf/execute.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <thread>

#include "sf/error.hpp"
#include "sf/passes.hpp"

namespace sf {
namespace {

// ---- line programs ----------------------------------------------------------
//
// Each AssignBlock compiles once per run into a register program evaluated
// over one line of the innermost loop (length 1 for point loops). Registers
// are line-sized buffers; constants fill their register once per arena.

enum class PK : unsigned char { Const, Load, Add, Mul, PowInt, PowE, Store };

struct Slot {
    const FunctionBase* fn = nullptr;
    const SparseFunction* via = nullptr;
    std::vector<AccessIndex> idx;
};

struct POp {
    PK k = PK::Const;
    int dst = -1;
    int a = -1;
    int b = -1;
    int slot = -1;
    double cval = 0.0;
    long ipow = 0;
    bool accumulate = false;
};

struct LineProgram {
    int nregs = 0;
    std::vector<POp> init; // constant fills, once per arena
    std::vector<POp> body; // per line
    std::vector<Slot> slots;
};

struct ProgramCompiler {
    LineProgram prog;
    std::map<Expr, int, ExprLess> memo;
    std::map<std::string, int> temp_regs;
    const std::map<std::string, double>* env = nullptr;
    const std::string* opname = nullptr;

    int newreg() { return prog.nregs++; }

    int constant(double v) {
        int r = newreg();
        POp op;
        op.k = PK::Const;
        op.dst = r;
        op.cval = v;
        prog.init.push_back(op);
        return r;
    }

    int make_slot(const ExprNode& a) {
        if (a.idx.size() != a.fn->dims().size())
            throw Error("access rank mismatch on " + a.fn->name());
        Slot s;
        s.fn = a.fn.get();
        s.via = a.via_points.get();
        s.idx = a.idx;
        prog.slots.push_back(std::move(s));
        return static_cast<int>(prog.slots.size()) - 1;
    }

    int chain(PK k, const std::vector<Expr>& kids) {
        int acc = compile(kids[0]);
        for (size_t i = 1; i < kids.size(); ++i) {
            int rhs = compile(kids[i]);
            int dst = newreg();
            POp op;
            op.k = k;
            op.dst = dst;
            op.a = acc;
            op.b = rhs;
            prog.body.push_back(op);
            acc = dst;
        }
        return acc;
    }

    int compile(const Expr& e) {
        auto it = memo.find(e);
        if (it != memo.end()) return it->second;
        int r = -1;
        switch (e->kind) {
        case ExprKind::RationalC: r = constant(to_double(e->rat)); break;
        case ExprKind::FloatC: r = constant(e->fval); break;
        case ExprKind::Sym: {
            auto t = temp_regs.find(e->sym);
            if (t != temp_regs.end()) {
                r = t->second;
            } else {
                auto v = env->find(e->sym);
                if (v == env->end())
                    throw BindingError(*opname + ": unbound symbol " + e->sym);
                r = constant(v->second);
            }
            break;
        }
        case ExprKind::Access: {
            r = newreg();
            POp op;
            op.k = PK::Load;
            op.dst = r;
            op.slot = make_slot(*e);
            prog.body.push_back(op);
            break;
        }
        case ExprKind::Add: r = chain(PK::Add, e->kids); break;
        case ExprKind::Mul: r = chain(PK::Mul, e->kids); break;
        case ExprKind::Pow: {
            const Expr& ex = e->kids[1];
            if (ex->kind == ExprKind::RationalC && is_integer(ex->rat)) {
                int base = compile(e->kids[0]);
                r = newreg();
                POp op;
                op.k = PK::PowInt;
                op.dst = r;
                op.a = base;
                op.ipow = static_cast<long>(ex->rat.convert_to<long long>());
                prog.body.push_back(op);
            } else {
                int base = compile(e->kids[0]);
                int exp = compile(ex);
                r = newreg();
                POp op;
                op.k = PK::PowE;
                op.dst = r;
                op.a = base;
                op.b = exp;
                prog.body.push_back(op);
            }
            break;
        }
        case ExprKind::Deriv: throw Error("derivative reached the executor unexpanded");
        }
        memo.emplace(e, r);
        return r;
    }
};

LineProgram compile_block(const AssignBlock& b, const std::map<std::string, double>& env,
                          const std::string& opname) {
    ProgramCompiler c;
    c.env = &env;
    c.opname = &opname;
    for (const auto& [name, def] : b.temps) c.temp_regs[name] = c.compile(def);
    for (const Assignment& a : b.assigns) {
        int src = c.compile(a.rhs);
        POp op;
        op.k = PK::Store;
        op.a = src;
        op.slot = c.make_slot(*a.lhs);
        op.accumulate = a.accumulate;
        c.prog.body.push_back(op);
    }
    return std::move(c.prog);
}

// ---- execution --------------------------------------------------------------

using LoopVals = std::map<std::string, long>;

// Address of line element 0 plus the element stride along the vector dim.
std::pair<double*, long> resolve(const Slot& s, const LoopVals& loops,
                                 const std::string& vec_dim, long vec_lo) {
    const FunctionBase& f = *s.fn;
    size_t off = 0;
    long stride = 0;
    int space_axis = 0;
    for (size_t d = 0; d < s.idx.size(); ++d) {
        const AccessIndex& ai = s.idx[d];
        long value = 0;
        switch (ai.dim.kind) {
        case DimKind::Time: {
            long t = loops.at(ai.dim.name) + ai.offset;
            long slots = f.time_slots();
            if (f.time_buffered()) {
                value = ((t % slots) + slots) % slots;
            } else {
                if (t < 0 || t >= slots)
                    throw ParameterError(f.name() + ": time index " + std::to_string(t) +
                                         " outside saved range [0, " + std::to_string(slots) +
                                         ")");
                value = t;
            }
            break;
        }
        case DimKind::Space: {
            if (s.via) {
                long p = loops.at(s.via->point_dim().name);
                value = s.via->base_table()[p * s.via->grid()->ndim() + space_axis] + ai.offset;
            } else if (!vec_dim.empty() && ai.dim.name == vec_dim) {
                value = vec_lo + ai.offset;
                stride = f.stride(static_cast<int>(d));
            } else {
                value = loops.at(ai.dim.name) + ai.offset;
            }
            ++space_axis;
            break;
        }
        case DimKind::Point: value = loops.at(ai.dim.name) + ai.offset; break;
        case DimKind::Aux: value = ai.offset; break;
        }
        off += static_cast<size_t>(value + f.halos()[d]) *
               static_cast<size_t>(f.stride(static_cast<int>(d)));
    }
    return {f.values() + off, stride};
}

template <class T>
T powi(T x, long e) {
    long n = e < 0 ? -e : e;
    T r = T(1);
    T b = x;
    while (n) {
        if (n & 1) r *= b;
        b *= b;
        n >>= 1;
    }
    return e < 0 ? T(1) / r : r;
}

// cap is the register stride the arena was laid out with; L <= cap is the
// live element count of this line.
template <class T>
void exec_line(const LineProgram& P, T* arena, long cap, long L,
               const std::vector<std::pair<double*, long>>& slots) {
    for (const POp& op : P.body) {
        T* dst = arena + op.dst * cap;
        switch (op.k) {
        case PK::Load: {
            const double* p = slots[op.slot].first;
            const long s = slots[op.slot].second;
            for (long i = 0; i < L; ++i) dst[i] = static_cast<T>(p[i * s]);
            break;
        }
        case PK::Add: {
            const T* a = arena + op.a * cap;
            const T* b = arena + op.b * cap;
            for (long i = 0; i < L; ++i) dst[i] = a[i] + b[i];
            break;
        }
        case PK::Mul: {
            const T* a = arena + op.a * cap;
            const T* b = arena + op.b * cap;
            for (long i = 0; i < L; ++i) dst[i] = a[i] * b[i];
            break;
        }
        case PK::PowInt: {
            const T* a = arena + op.a * cap;
            for (long i = 0; i < L; ++i) dst[i] = powi(a[i], op.ipow);
            break;
        }
        case PK::PowE: {
            const T* a = arena + op.a * cap;
            const T* b = arena + op.b * cap;
            for (long i = 0; i < L; ++i) dst[i] = static_cast<T>(std::pow(a[i], b[i]));
            break;
        }
        case PK::Store: {
            double* p = slots[op.slot].first;
            const long s = slots[op.slot].second;
            const T* a = arena + op.a * cap;
            if (op.accumulate)
                for (long i = 0; i < L; ++i) p[i * s] += static_cast<double>(a[i]);
            else
                for (long i = 0; i < L; ++i) p[i * s] = static_cast<double>(a[i]);
            break;
        }
        case PK::Const: break;
        }
    }
}

struct BlockInfo {
    LineProgram prog;
    long max_line = 1;
};

struct Engine {
    Operator* op = nullptr;
    const RunArgs* args = nullptr;
    std::map<std::string, double> env;
    std::map<const AssignBlock*, BlockInfo> blocks;

    // per-worker register arenas, keyed by block
    struct State {
        std::map<const AssignBlock*, std::vector<double>> f64;
        std::map<const AssignBlock*, std::vector<float>> f32;
        std::vector<std::pair<double*, long>> slots;
    };

    template <class T>
    T* arena_for(State& st, const AssignBlock* b, const BlockInfo& info);

    void prepare();
    void run_nodes(const std::vector<IRNode>& nodes, LoopVals& loops, State& st, bool threaded);
    void run_block(const AssignBlock& b, LoopVals& loops, State& st, const std::string& vec_dim,
                   long lo, long L);
    void run_loop(const Iteration& it, LoopVals& loops, State& st, bool threaded);
    void check_fields(long t) const;
};

template <>
double* Engine::arena_for<double>(State& st, const AssignBlock* b, const BlockInfo& info) {
    auto it = st.f64.find(b);
    if (it == st.f64.end()) {
        std::vector<double> a(static_cast<size_t>(info.prog.nregs) * info.max_line);
        for (const POp& op : info.prog.init)
            std::fill_n(a.begin() + op.dst * info.max_line, info.max_line, op.cval);
        it = st.f64.emplace(b, std::move(a)).first;
    }
    return it->second.data();
}

template <>
float* Engine::arena_for<float>(State& st, const AssignBlock* b, const BlockInfo& info) {
    auto it = st.f32.find(b);
    if (it == st.f32.end()) {
        std::vector<float> a(static_cast<size_t>(info.prog.nregs) * info.max_line);
        for (const POp& op : info.prog.init)
            std::fill_n(a.begin() + op.dst * info.max_line, info.max_line,
                        static_cast<float>(op.cval));
        it = st.f32.emplace(b, std::move(a)).first;
    }
    return it->second.data();
}

void Engine::prepare() {
    env = args->bind.scalars;
    for (const auto& [name, fn] : op->fields) {
        const auto& g = fn->grid();
        for (int d = 0; d < g->ndim(); ++d) env.emplace(g->spacing_symbol(d), g->spacing()[d]);
    }
    for (const auto& [name, def] : op->pre_temps) {
        ProgramCompiler c;
        c.env = &env;
        c.opname = &op->name;
        int r = c.compile(def);
        std::vector<double> arena(c.prog.nregs);
        for (const POp& o : c.prog.init) arena[o.dst] = o.cval;
        std::vector<std::pair<double*, long>> none;
        exec_line<double>(c.prog, arena.data(), 1, 1, none);
        env[name] = arena[r];
    }

    // line length bound: the innermost extent of the owning nest
    struct Walk {
        Engine* e;
        void nodes(const std::vector<IRNode>& ns, long line) {
            for (const IRNode& n : ns) {
                if (n.block) {
                    BlockInfo info;
                    info.prog = compile_block(*n.block, e->env, e->op->name);
                    info.max_line = std::max<long>(1, line);
                    e->blocks.emplace(n.block.get(), std::move(info));
                }
                if (n.loop) {
                    long l = n.loop->vector && n.loop->kind == LoopKind::Space
                                 ? n.loop->hi - n.loop->lo
                                 : 1;
                    nodes(n.loop->body, l);
                }
            }
        }
    };
    Walk w{this};
    w.nodes(op->prologue, 1);
    w.nodes(op->roots, 1);
}

void Engine::run_block(const AssignBlock& b, LoopVals& loops, State& st,
                       const std::string& vec_dim, long lo, long L) {
    const BlockInfo& info = blocks.at(&b);
    st.slots.resize(info.prog.slots.size());
    for (size_t i = 0; i < info.prog.slots.size(); ++i)
        st.slots[i] = resolve(info.prog.slots[i], loops, vec_dim, lo);
    if (args->precision == Precision::F32)
        exec_line<float>(info.prog, arena_for<float>(st, &b, info), info.max_line, L, st.slots);
    else
        exec_line<double>(info.prog, arena_for<double>(st, &b, info), info.max_line, L, st.slots);
}

void Engine::check_fields(long t) const {
    for (const auto& [name, fn] : op->fields) {
        if (!fn->has_time() || fn->space_rank() == 0) continue;
        const double* p = fn->values();
        size_t n = fn->storage_size();
        for (size_t i = 0; i < n; ++i)
            if (!std::isfinite(p[i]))
                throw StabilityError(op->name + ": " + name + " went non-finite by step " +
                                     std::to_string(t));
    }
}

void Engine::run_loop(const Iteration& it, LoopVals& loops, State& st, bool threaded) {
    if (it.kind == LoopKind::Time) {
        long from = args->t_from, to = args->t_to;
        if (it.dir == Direction::Forward) {
            for (long t = from; t < to; ++t) {
                loops[it.dim.name] = t;
                run_nodes(it.body, loops, st, threaded);
                if (args->check_finite && ((t - from) % 64 == 63 || t + 1 == to))
                    check_fields(t);
            }
        } else {
            for (long t = to - 1; t >= from; --t) {
                loops[it.dim.name] = t;
                run_nodes(it.body, loops, st, threaded);
                if (args->check_finite && ((to - 1 - t) % 64 == 63 || t == from)) check_fields(t);
            }
        }
        return;
    }

    if (it.kind == LoopKind::Point) {
        for (long p = it.lo; p < it.hi; ++p) {
            loops[it.dim.name] = p;
            run_nodes(it.body, loops, st, threaded);
        }
        return;
    }

    // space loop; line path when this is the vector loop over a single block
    bool line_path = it.vector && it.body.size() == 1 && it.body[0].block;
    long step = it.block > 0 ? it.block : it.hi - it.lo;
    if (step <= 0) step = 1;

    if (!line_path && it.parallel && !threaded && args->nthreads > 1 && it.hi - it.lo > 1) {
        long n = std::min<long>(args->nthreads, it.hi - it.lo);
        std::vector<std::thread> pool;
        pool.reserve(n);
        for (long w = 0; w < n; ++w) {
            long chunk_lo = it.lo + (it.hi - it.lo) * w / n;
            long chunk_hi = it.lo + (it.hi - it.lo) * (w + 1) / n;
            pool.emplace_back([&, chunk_lo, chunk_hi]() {
                LoopVals local = loops;
                State own;
                for (long tile = chunk_lo; tile < chunk_hi; tile += step) {
                    long hi = std::min(tile + step, chunk_hi);
                    for (long v = tile; v < hi; ++v) {
                        local[it.dim.name] = v;
                        run_nodes(it.body, local, own, true);
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        return;
    }

    for (long tile = it.lo; tile < it.hi; tile += step) {
        long hi = std::min(tile + step, it.hi);
        if (line_path) {
            run_block(*it.body[0].block, loops, st, it.dim.name, tile, hi - tile);
        } else {
            for (long v = tile; v < hi; ++v) {
                loops[it.dim.name] = v;
                run_nodes(it.body, loops, st, threaded);
            }
        }
    }
}

void Engine::run_nodes(const std::vector<IRNode>& nodes, LoopVals& loops, State& st,
                       bool threaded) {
    for (const IRNode& n : nodes) {
        if (n.loop) run_loop(*n.loop, loops, st, threaded);
        else if (n.block) run_block(*n.block, loops, st, "", 0, 1);
    }
}

// flops actually executed per run of the given subtree
long long tree_flops(const std::vector<IRNode>& nodes, long time_steps) {
    long long total = 0;
    for (const IRNode& n : nodes) {
        if (n.block) {
            OpCount c;
            for (const auto& [name, e] : n.block->temps) {
                OpCount t = count_ops(e);
                c.adds += t.adds;
                c.muls += t.muls;
            }
            for (const Assignment& a : n.block->assigns) {
                OpCount t = count_ops(a.rhs);
                c.adds += t.adds + (a.accumulate ? 1 : 0);
                c.muls += t.muls;
            }
            total += c.total();
        } else if (n.loop) {
            long long extent = n.loop->kind == LoopKind::Time
                                   ? std::max<long>(0, time_steps)
                                   : std::max<long>(0, n.loop->hi - n.loop->lo);
            total += extent * tree_flops(n.loop->body, time_steps);
        }
    }
    return total;
}

std::vector<std::pair<const FunctionBase*, std::vector<double>>> snapshot(const Operator& op) {
    std::vector<std::pair<const FunctionBase*, std::vector<double>>> s;
    for (const auto& [name, fn] : op.fields)
        s.emplace_back(fn.get(), std::vector<double>(fn->values(), fn->values() + fn->storage_size()));
    return s;
}

void restore(const std::vector<std::pair<const FunctionBase*, std::vector<double>>>& s) {
    for (const auto& [fn, data] : s)
        std::memcpy(fn->values(), data.data(), data.size() * sizeof(double));
}

void clear_tiles(Operator& op) {
    struct W {
        static void go(std::vector<IRNode>& ns) {
            for (IRNode& n : ns)
                if (n.loop) {
                    n.loop->block = 0;
                    go(n.loop->body);
                }
        }
    };
    W::go(op.roots);
}

std::vector<std::vector<long>> default_candidates(const Operator& op) {
    int rank = 0;
    struct W {
        static void depth(const std::vector<IRNode>& ns, int d, int& best) {
            for (const IRNode& n : ns)
                if (n.loop) {
                    int nd = d + (n.loop->kind == LoopKind::Space ? 1 : 0);
                    best = std::max(best, nd);
                    depth(n.loop->body, nd, best);
                }
        }
    };
    W::depth(op.roots, 0, rank);
    std::vector<std::vector<long>> cands;
    cands.push_back({});
    if (rank == 0) return cands;
    int tiled = std::max(1, rank - 1);
    for (long t : {8L, 16L, 32L, 64L}) cands.push_back(std::vector<long>(tiled, t));
    return cands;
}

} // namespace

std::vector<long> autotune(Operator& op, const std::vector<std::vector<long>>& candidates,
                           long trial_steps, const RunArgs& args) {
    if (candidates.empty()) throw ParameterError("autotune needs at least one candidate");
    if (trial_steps < 1) throw ParameterError("autotune needs at least one trial step");

    auto saved = snapshot(op);
    RunArgs trial = args;
    trial.check_finite = false;
    trial.t_to = std::min(args.t_to, args.t_from + trial_steps);
    op.autotune_pending = false;

    size_t best = 0;
    double best_time = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
        clear_tiles(op);
        if (!candidates[i].empty()) block_loops(op, candidates[i]);
        ExecutionReport r = run(op, trial);
        restore(saved);
        if (i == 0 || r.seconds < best_time) {
            best = i;
            best_time = r.seconds;
        }
    }
    clear_tiles(op);
    if (!candidates[best].empty()) block_loops(op, candidates[best]);
    op.autotuned_tiles = candidates[best];
    return candidates[best];
}

ExecutionReport run(Operator& op, const RunArgs& args) {
    if (op.autotune_pending && op.has_time_loop && args.t_to - args.t_from > 1)
        autotune(op, default_candidates(op), std::min<long>(3, args.t_to - args.t_from), args);
    op.autotune_pending = false;

    Engine eng;
    eng.op = &op;
    eng.args = &args;
    eng.prepare();

    Engine::State st;
    LoopVals loops;
    auto start = std::chrono::steady_clock::now();
    eng.run_nodes(op.prologue, loops, st, false);
    eng.run_nodes(op.roots, loops, st, false);
    auto stop = std::chrono::steady_clock::now();

    ExecutionReport rep;
    rep.steps = op.has_time_loop ? std::max<long>(0, args.t_to - args.t_from) : 1;
    rep.seconds = std::chrono::duration<double>(stop - start).count();
    rep.flops = tree_flops(op.roots, rep.steps) + tree_flops(op.prologue, 1);
    rep.gflops = rep.seconds > 0 ? static_cast<double>(rep.flops) / rep.seconds / 1e9 : 0.0;
    rep.tiles = op.autotuned_tiles;
    return rep;
}

} // namespace sf
