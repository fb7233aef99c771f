#include "sf/emit.hpp"

#include <dlfcn.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>
#include <chrono>
#include <sstream>

#include "sf/error.hpp"
#include "sf/passes.hpp"

namespace sf {
namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    if (s.find_first_of(".einf") == std::string::npos) s += ".0";
    return s;
}

// expression precedence: additions bind loosest, calls and atoms tightest
enum { PrecAdd = 1, PrecMul = 2, PrecAtom = 3 };

struct CEmitter {
    const Operator* op = nullptr;
    std::ostringstream out;
    int depth = 0;
    std::vector<std::string> field_order, sparse_order;

    void line(const std::string& s) {
        for (int i = 0; i < depth; ++i) out << "  ";
        out << s << '\n';
    }

    static std::string sym_ref(const Operator& op, const std::string& name) {
        for (const std::string& s : op.symbols)
            if (s == name) return "v_" + name;
        return name; // pre-temp or block temp
    }

    std::string index_expr(const ExprNode& a) const {
        const FunctionBase& f = *a.fn;
        std::string idx;
        for (size_t d = 0; d < a.idx.size(); ++d) {
            const AccessIndex& ai = a.idx[d];
            std::string term;
            long fold = ai.offset + f.halos()[d];
            switch (ai.dim.kind) {
            case DimKind::Time: {
                std::string t = ai.dim.name;
                if (ai.offset > 0) t += " + " + std::to_string(ai.offset);
                if (ai.offset < 0) t += " - " + std::to_string(-ai.offset);
                if (f.time_buffered()) {
                    std::string s = std::to_string(f.time_slots());
                    term = "(((" + t + ") % " + s + " + " + s + ") % " + s + ")";
                } else {
                    term = "(" + t + ")";
                }
                break;
            }
            case DimKind::Space:
                if (a.via_points) {
                    int axis = 0;
                    for (size_t k = 0; k < d; ++k)
                        if (a.idx[k].dim.kind == DimKind::Space) ++axis;
                    term = "(b_" + a.via_points->name() + "[" + a.via_points->point_dim().name +
                           " * " + std::to_string(a.via_points->grid()->ndim()) + " + " +
                           std::to_string(axis) + "]";
                    if (fold > 0) term += " + " + std::to_string(fold);
                    if (fold < 0) term += " - " + std::to_string(-fold);
                    term += ")";
                } else {
                    term = ai.dim.name;
                    if (fold > 0) term = "(" + term + " + " + std::to_string(fold) + ")";
                    if (fold < 0) term = "(" + term + " - " + std::to_string(-fold) + ")";
                }
                break;
            case DimKind::Point:
                term = ai.dim.name;
                if (fold > 0) term = "(" + term + " + " + std::to_string(fold) + ")";
                if (fold < 0) term = "(" + term + " - " + std::to_string(-fold) + ")";
                break;
            case DimKind::Aux: term = std::to_string(fold); break;
            }
            long stride = f.stride(static_cast<int>(d));
            if (!idx.empty()) idx += " + ";
            idx += term;
            if (stride != 1) idx += " * " + std::to_string(stride);
        }
        return idx.empty() ? "0" : idx;
    }

    std::string expr(const Expr& e, int parent_prec) const {
        switch (e->kind) {
        case ExprKind::RationalC: {
            double v = to_double(e->rat);
            std::string s = fmt_double(v);
            return v < 0 ? "(" + s + ")" : s;
        }
        case ExprKind::FloatC: {
            std::string s = fmt_double(e->fval);
            return e->fval < 0 ? "(" + s + ")" : s;
        }
        case ExprKind::Sym: return sym_ref(*op, e->sym);
        case ExprKind::Access: return "f_" + e->fn->name() + "[" + index_expr(*e) + "]";
        case ExprKind::Add: {
            std::string s;
            for (size_t i = 0; i < e->kids.size(); ++i) {
                if (i) s += " + ";
                s += expr(e->kids[i], PrecAdd);
            }
            return parent_prec > PrecAdd ? "(" + s + ")" : s;
        }
        case ExprKind::Mul: {
            std::string s;
            for (size_t i = 0; i < e->kids.size(); ++i) {
                if (i) s += " * ";
                s += expr(e->kids[i], PrecMul);
            }
            return parent_prec > PrecMul ? "(" + s + ")" : s;
        }
        case ExprKind::Pow: {
            const Expr& b = e->kids[0];
            const Expr& x = e->kids[1];
            if (x->kind == ExprKind::RationalC && is_integer(x->rat))
                return "sf_powi(" + expr(b, PrecAtom) + ", " +
                       std::to_string(static_cast<long>(to_double(x->rat))) + "L)";
            return "pow(" + expr(b, 0) + ", " + expr(x, 0) + ")";
        }
        case ExprKind::Deriv: break;
        }
        throw Error("emit: unexpanded derivative in operator body");
    }

    void emit_block(const AssignBlock& b) {
        for (const auto& [name, def] : b.temps)
            line("const double " + name + " = " + expr(def, 0) + ";");
        for (const Assignment& a : b.assigns) {
            std::string lhs = "f_" + a.lhs->fn->name() + "[" + index_expr(*a.lhs) + "]";
            line(lhs + (a.accumulate ? " += " : " = ") + expr(a.rhs, 0) + ";");
        }
    }

    void emit_loop(const Iteration& it) {
        const std::string& v = it.dim.name;
        if (it.kind == LoopKind::Time) {
            if (it.dir == Direction::Forward)
                line("for (long " + v + " = t_from; " + v + " < t_to; ++" + v + ") {");
            else
                line("for (long " + v + " = t_to - 1; " + v + " >= t_from; --" + v + ") {");
            ++depth;
            emit_nodes(it.body);
            --depth;
            line("}");
            return;
        }
        std::string lo = std::to_string(it.lo), hi = std::to_string(it.hi);
        std::string head;
        if (it.parallel) head = "/* parallel */ ";
        if (it.kind == LoopKind::Space && it.block > 0) {
            std::string bs = std::to_string(it.block);
            line(head + "for (long " + v + "_blk = " + lo + "; " + v + "_blk < " + hi + "; " + v +
                 "_blk += " + bs + ") {");
            ++depth;
            line("long " + v + "_hi = " + v + "_blk + " + bs + " < " + hi + " ? " + v + "_blk + " +
                 bs + " : " + hi + ";");
            line("for (long " + v + " = " + v + "_blk; " + v + " < " + v + "_hi; ++" + v + ") {");
            ++depth;
            emit_nodes(it.body);
            --depth;
            line("}");
            --depth;
            line("}");
            return;
        }
        line(head + "for (long " + v + " = " + lo + "; " + v + " < " + hi + "; ++" + v + ") {");
        ++depth;
        emit_nodes(it.body);
        --depth;
        line("}");
    }

    void emit_nodes(const std::vector<IRNode>& nodes) {
        for (const IRNode& n : nodes) {
            if (n.loop) emit_loop(*n.loop);
            if (n.block) emit_block(*n.block);
        }
    }

    std::string render() {
        for (const auto& [name, fn] : op->fields) field_order.push_back(name);
        for (const auto& [name, sp] : op->sparse) sparse_order.push_back(name);

        out << "/* generated stencil kernel: " << op->name << " */\n";
        out << "#include <math.h>\n\n";
        out << "static double sf_powi(double x, long e)\n{\n"
               "  long n = e < 0 ? -e : e;\n"
               "  double r = 1.0, b = x;\n"
               "  while (n) {\n"
               "    if (n & 1) r *= b;\n"
               "    b *= b;\n"
               "    n >>= 1;\n"
               "  }\n"
               "  return e < 0 ? 1.0 / r : r;\n"
               "}\n\n";
        out << "void sf_kernel(double** F, const double* S, const long** B, long t_from, "
               "long t_to)\n{\n";
        depth = 1;
        for (size_t i = 0; i < field_order.size(); ++i)
            line("double* restrict f_" + field_order[i] + " = F[" + std::to_string(i) + "];");
        for (size_t i = 0; i < op->symbols.size(); ++i)
            line("const double v_" + op->symbols[i] + " = S[" + std::to_string(i) + "];");
        for (size_t i = 0; i < sparse_order.size(); ++i)
            line("const long* b_" + sparse_order[i] + " = B[" + std::to_string(i) + "];");
        line("(void)F; (void)S; (void)B; (void)t_from; (void)t_to;");
        for (const auto& [name, def] : op->pre_temps)
            line("const double " + name + " = " + expr(def, 0) + ";");
        if (!op->prologue.empty()) {
            line("");
            line("/* prologue: runs once before the stepping loops */");
            emit_nodes(op->prologue);
        }
        line("");
        emit_nodes(op->roots);
        out << "}\n";
        return out.str();
    }
};

std::string find_cc() {
    std::vector<std::string> cands;
    if (const char* cc = std::getenv("CC")) cands.push_back(cc);
    cands.insert(cands.end(), {"cc", "gcc", "clang"});
    for (const std::string& c : cands) {
        if (c.empty()) continue;
        std::string probe = c + " --version > /dev/null 2>&1";
        if (std::system(probe.c_str()) == 0) return c;
    }
    return {};
}

struct KernelCache {
    std::mutex mu;
    std::map<size_t, void*> entries; // source hash -> dlsym'd kernel
    std::string dir;
};

KernelCache& cache() {
    static KernelCache c;
    return c;
}

using KernelFn = void (*)(double**, const double*, const long**, long, long);

KernelFn compile_kernel(const std::string& source) {
    KernelCache& c = cache();
    size_t key = std::hash<std::string>{}(source);
    std::lock_guard<std::mutex> lock(c.mu);
    auto it = c.entries.find(key);
    if (it != c.entries.end()) return reinterpret_cast<KernelFn>(it->second);

    std::string cc = find_cc();
    if (cc.empty()) throw CapabilityError("no C compiler found on PATH (tried CC, cc, gcc, clang)");
    if (c.dir.empty()) {
        char tmpl[] = "/tmp/sfemitXXXXXX";
        if (!mkdtemp(tmpl)) throw CapabilityError("cannot create kernel build directory");
        c.dir = tmpl;
    }
    std::string stem = c.dir + "/k" + std::to_string(key);
    {
        std::ofstream f(stem + ".c");
        f << source;
    }
    std::string cmd = cc + " -O2 -fPIC -shared -o " + stem + ".so " + stem + ".c -lm > " + stem +
                      ".log 2>&1";
    if (std::system(cmd.c_str()) != 0)
        throw CapabilityError("C backend compilation failed, see " + stem + ".log");
    void* handle = dlopen((stem + ".so").c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!handle) throw CapabilityError(std::string("dlopen failed: ") + dlerror());
    void* fn = dlsym(handle, "sf_kernel");
    if (!fn) throw CapabilityError("emitted kernel is missing its entry point");
    c.entries.emplace(key, fn);
    return reinterpret_cast<KernelFn>(fn);
}

} // namespace

std::string emit_c(const Operator& op) {
    CEmitter e;
    e.op = &op;
    return e.render();
}

bool emit_backend_available() { return !find_cc().empty(); }

ExecutionReport run_emitted(Operator& op, const RunArgs& args) {
    if (args.precision != Precision::F64)
        throw CapabilityError("the emitted C backend runs in f64 only");
    KernelFn fn = compile_kernel(emit_c(op));

    std::map<std::string, double> env = args.bind.scalars;
    for (const auto& [name, f] : op.fields) {
        const auto& g = f->grid();
        for (int d = 0; d < g->ndim(); ++d) env.emplace(g->spacing_symbol(d), g->spacing()[d]);
    }
    std::vector<double*> F;
    for (const auto& [name, f] : op.fields) F.push_back(f->values());
    std::vector<double> S;
    for (const std::string& s : op.symbols) {
        auto it = env.find(s);
        if (it == env.end()) throw BindingError(op.name + ": unbound symbol " + s);
        S.push_back(it->second);
    }
    std::vector<std::vector<long>> bases;
    std::vector<const long*> B;
    for (const auto& [name, sp] : op.sparse) {
        bases.push_back(sp->base_table());
        B.push_back(bases.back().data());
    }

    auto start = std::chrono::steady_clock::now();
    fn(F.data(), S.data(), B.data(), args.t_from, args.t_to);
    auto stop = std::chrono::steady_clock::now();

    if (args.check_finite) {
        for (const auto& [name, f] : op.fields) {
            if (!f->has_time() || f->space_rank() == 0) continue;
            const double* p = f->values();
            for (size_t i = 0; i < f->storage_size(); ++i)
                if (!std::isfinite(p[i]))
                    throw StabilityError(op.name + ": " + name + " went non-finite");
        }
    }

    ExecutionReport rep;
    rep.steps = op.has_time_loop ? std::max<long>(0, args.t_to - args.t_from) : 1;
    rep.seconds = std::chrono::duration<double>(stop - start).count();
    long pts = 0;
    for_each_block(op.roots, [&](const AssignBlock& b) {
        if (b.points) return;
        for (const Assignment& a : b.assigns) {
            long n = 1;
            const FunctionBase& f = *a.lhs->fn;
            for (size_t d = 0; d < f.extents().size(); ++d)
                if (f.dims()[d].kind == DimKind::Space) n *= f.extents()[d];
            pts = std::max(pts, n);
        }
    });
    rep.flops = static_cast<long long>(op.metrics.flops_per_point.total()) * pts * rep.steps;
    rep.gflops = rep.seconds > 0 ? static_cast<double>(rep.flops) / rep.seconds / 1e9 : 0.0;
    rep.tiles = op.autotuned_tiles;
    return rep;
}

} // namespace sf
