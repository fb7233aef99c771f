#include "sf/expr.hpp"

#include "sf/function.hpp"
#include "sf/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace sf {

namespace {

constexpr size_t kFnvOffset = 1469598103934665603ull;
constexpr size_t kFnvPrime = 1099511628211ull;

size_t fnv(size_t h, const void* p, size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= kFnvPrime;
    }
    return h;
}

size_t fnv_str(size_t h, const std::string& s) { return fnv(h, s.data(), s.size()); }

size_t hash_node(const ExprNode& n) {
    size_t h = kFnvOffset;
    unsigned char k = static_cast<unsigned char>(n.kind);
    h = fnv(h, &k, 1);
    switch (n.kind) {
    case ExprKind::RationalC:
        h = fnv_str(h, rational_str(n.rat));
        break;
    case ExprKind::FloatC:
        h = fnv(h, &n.fval, sizeof n.fval);
        break;
    case ExprKind::Sym:
        h = fnv_str(h, n.sym);
        break;
    case ExprKind::Access: {
        h = fnv_str(h, n.fn->name());
        if (n.via_points) h = fnv_str(h, n.via_points->name());
        for (const AccessIndex& ix : n.idx) {
            h = fnv_str(h, ix.dim.name);
            h = fnv(h, &ix.offset, sizeof ix.offset);
        }
        break;
    }
    case ExprKind::Deriv: {
        h = fnv_str(h, n.deriv_dim.name);
        h = fnv(h, &n.deriv_order, sizeof n.deriv_order);
        h = fnv(h, &n.fd_order, sizeof n.fd_order);
        for (int o : n.custom_offsets) h = fnv(h, &o, sizeof o);
        break;
    }
    default:
        break;
    }
    for (const Expr& k2 : n.kids) h = fnv(h, &k2->hash, sizeof k2->hash);
    return h;
}

Expr seal(std::shared_ptr<ExprNode> n) {
    n->hash = hash_node(*n);
    return n;
}

} // namespace

Expr rational(Rational v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::RationalC;
    n->rat = std::move(v);
    return seal(std::move(n));
}

Expr rational(long num, long den) { return rational(Rational(num, den)); }

Expr floatc(double v) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::FloatC;
    n->fval = v;
    return seal(std::move(n));
}

Expr symbol(std::string name) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Sym;
    n->sym = std::move(name);
    return seal(std::move(n));
}

Expr make_access(std::shared_ptr<const FunctionBase> fn, std::vector<AccessIndex> idx,
                 std::shared_ptr<const SparseFunction> via_points) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Access;
    n->fn = std::move(fn);
    n->idx = std::move(idx);
    n->via_points = std::move(via_points);
    return seal(std::move(n));
}

Expr make_add(std::vector<Expr> kids) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Add;
    n->kids = std::move(kids);
    return seal(std::move(n));
}

Expr make_mul(std::vector<Expr> kids) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Mul;
    n->kids = std::move(kids);
    return seal(std::move(n));
}

Expr make_pow(Expr base, Expr exp) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Pow;
    n->kids = {std::move(base), std::move(exp)};
    return seal(std::move(n));
}

Expr make_deriv(Expr target, Dim dim, int deriv_order, int fd_order,
                std::vector<int> custom_offsets) {
    auto n = std::make_shared<ExprNode>();
    n->kind = ExprKind::Deriv;
    n->kids = {std::move(target)};
    n->deriv_dim = std::move(dim);
    n->deriv_order = deriv_order;
    n->fd_order = fd_order;
    n->custom_offsets = std::move(custom_offsets);
    return seal(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) { return make_add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return make_add({a, make_mul({rational(-1), b})}); }
Expr operator*(const Expr& a, const Expr& b) { return make_mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return make_mul({a, make_pow(b, rational(-1))}); }
Expr operator-(const Expr& a) { return make_mul({rational(-1), a}); }
Expr pow_int(const Expr& base, long e) { return make_pow(base, rational(e)); }

// --- comparison ---------------------------------------------------------

int compare(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return 0;
    if (a->kind != b->kind)
        return static_cast<int>(a->kind) < static_cast<int>(b->kind) ? -1 : 1;
    switch (a->kind) {
    case ExprKind::RationalC:
        if (a->rat == b->rat) return 0;
        return a->rat < b->rat ? -1 : 1;
    case ExprKind::FloatC:
        if (a->fval == b->fval) return 0;
        return a->fval < b->fval ? -1 : 1;
    case ExprKind::Sym:
        return a->sym.compare(b->sym);
    case ExprKind::Access: {
        if (int c = a->fn->name().compare(b->fn->name())) return c;
        const std::string& va = a->via_points ? a->via_points->name() : std::string();
        const std::string& vb = b->via_points ? b->via_points->name() : std::string();
        if (int c = va.compare(vb)) return c;
        if (a->idx.size() != b->idx.size()) return a->idx.size() < b->idx.size() ? -1 : 1;
        for (size_t i = 0; i < a->idx.size(); ++i) {
            if (int c = a->idx[i].dim.name.compare(b->idx[i].dim.name)) return c;
            if (a->idx[i].offset != b->idx[i].offset)
                return a->idx[i].offset < b->idx[i].offset ? -1 : 1;
        }
        return 0;
    }
    case ExprKind::Deriv: {
        if (int c = compare(a->kids[0], b->kids[0])) return c;
        if (int c = a->deriv_dim.name.compare(b->deriv_dim.name)) return c;
        if (a->deriv_order != b->deriv_order) return a->deriv_order < b->deriv_order ? -1 : 1;
        if (a->fd_order != b->fd_order) return a->fd_order < b->fd_order ? -1 : 1;
        if (a->custom_offsets != b->custom_offsets)
            return a->custom_offsets < b->custom_offsets ? -1 : 1;
        return 0;
    }
    case ExprKind::Add:
    case ExprKind::Mul:
    case ExprKind::Pow: {
        if (a->kids.size() != b->kids.size()) return a->kids.size() < b->kids.size() ? -1 : 1;
        for (size_t i = 0; i < a->kids.size(); ++i)
            if (int c = compare(a->kids[i], b->kids[i])) return c;
        return 0;
    }
    }
    return 0;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    if (a->hash != b->hash) return false;
    return compare(a, b) == 0;
}

bool contains(const Expr& e, const Expr& needle) {
    if (equal(e, needle)) return true;
    for (const Expr& k : e->kids)
        if (contains(k, needle)) return true;
    return false;
}

// --- folding --------------------------------------------------------------

namespace {

// Split a folded term into (rational coefficient, core). The core of a
// product is the product without its rational factors.
std::pair<Rational, Expr> split_coeff(const Expr& t) {
    if (t->kind == ExprKind::RationalC) return {t->rat, rational(1)};
    if (t->kind != ExprKind::Mul) return {Rational(1), t};
    Rational c(1);
    std::vector<Expr> rest;
    for (const Expr& k : t->kids) {
        if (k->kind == ExprKind::RationalC)
            c *= k->rat;
        else
            rest.push_back(k);
    }
    if (rest.empty()) return {c, rational(1)};
    if (rest.size() == 1) return {c, rest[0]};
    return {c, make_mul(std::move(rest))};
}

Expr rebuild_term(const Rational& c, const Expr& core) {
    if (core->is_one()) return rational(c);
    if (c == 1) return core;
    std::vector<Expr> kids;
    kids.push_back(rational(c));
    if (core->kind == ExprKind::Mul)
        kids.insert(kids.end(), core->kids.begin(), core->kids.end());
    else
        kids.push_back(core);
    return make_mul(std::move(kids));
}

Expr fold_add(std::vector<Expr> kids) {
    Rational rsum(0);
    double fsum = 0.0;
    bool have_float = false;
    std::map<Expr, Rational, ExprLess> terms;
    for (const Expr& k : kids) {
        if (k->kind == ExprKind::RationalC) {
            rsum += k->rat;
        } else if (k->kind == ExprKind::FloatC) {
            fsum += k->fval;
            have_float = true;
        } else {
            auto [c, core] = split_coeff(k);
            terms[core] += c;
        }
    }
    std::vector<Expr> out;
    if (rsum != 0) out.push_back(rational(rsum));
    if (have_float) out.push_back(floatc(fsum));
    for (const auto& [core, c] : terms) {
        if (c == 0) continue;
        out.push_back(rebuild_term(c, core));
    }
    if (out.empty()) return rational(0);
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), ExprLess{});
    return make_add(std::move(out));
}

Expr fold_mul(std::vector<Expr> kids) {
    Rational coeff(1);
    double fprod = 1.0;
    bool have_float = false;
    // base -> accumulated rational exponent, plus pass-through factors whose
    // exponents are not rational
    std::map<Expr, Rational, ExprLess> powers;
    std::vector<Expr> opaque;
    for (const Expr& k : kids) {
        if (k->kind == ExprKind::RationalC) {
            coeff *= k->rat;
        } else if (k->kind == ExprKind::FloatC) {
            fprod *= k->fval;
            have_float = true;
        } else if (k->kind == ExprKind::Pow && k->kids[1]->kind == ExprKind::RationalC) {
            powers[k->kids[0]] += k->kids[1]->rat;
        } else {
            powers[k] += 1;
        }
    }
    if (coeff == 0 && !have_float) return rational(0);
    std::vector<Expr> out;
    for (const auto& [base, e] : powers) {
        if (e == 0) continue;
        if (base->kind == ExprKind::RationalC && is_integer(e)) {
            long ei = static_cast<long>(numerator(e));
            if (base->rat == 0 && ei < 0) throw SingularError("zero raised to a negative power");
            coeff *= rational_pow(base->rat, ei);
            continue;
        }
        if (base->kind == ExprKind::FloatC && is_integer(e)) {
            fprod *= std::pow(base->fval, static_cast<double>(numerator(e)));
            have_float = true;
            continue;
        }
        if (e == 1)
            out.push_back(base);
        else
            out.push_back(make_pow(base, rational(e)));
    }
    if (coeff == 0 && !have_float) return rational(0);
    if (have_float && fprod == 0.0) return floatc(0.0);
    std::vector<Expr> front;
    if (coeff != 1 || (out.empty() && !have_float)) front.push_back(rational(coeff));
    if (have_float) front.push_back(floatc(fprod));
    std::sort(out.begin(), out.end(), ExprLess{});
    front.insert(front.end(), out.begin(), out.end());
    if (front.empty()) return rational(1);
    if (front.size() == 1) return front[0];
    return make_mul(std::move(front));
}

Expr fold_pow(const Expr& base, const Expr& exp) {
    if (exp->is_zero()) return rational(1);
    if (exp->is_one()) return base;
    if (base->kind == ExprKind::RationalC && exp->kind == ExprKind::RationalC &&
        is_integer(exp->rat)) {
        long e = static_cast<long>(numerator(exp->rat));
        if (base->rat == 0 && e < 0) throw SingularError("zero raised to a negative power");
        return rational(rational_pow(base->rat, e));
    }
    if (base->kind == ExprKind::FloatC && exp->kind == ExprKind::RationalC)
        return floatc(std::pow(base->fval, to_double(exp->rat)));
    if (base->kind == ExprKind::Pow && base->kids[1]->kind == ExprKind::RationalC &&
        exp->kind == ExprKind::RationalC && is_integer(base->kids[1]->rat) &&
        is_integer(exp->rat)) {
        return fold_pow(base->kids[0], rational(base->kids[1]->rat * exp->rat));
    }
    return make_pow(base, exp);
}

} // namespace

Expr fold(const Expr& e) {
    switch (e->kind) {
    case ExprKind::RationalC:
    case ExprKind::FloatC:
    case ExprKind::Sym:
    case ExprKind::Access:
        return e;
    case ExprKind::Deriv: {
        Expr t = fold(e->kids[0]);
        if (t.get() == e->kids[0].get()) return e;
        return make_deriv(t, e->deriv_dim, e->deriv_order, e->fd_order, e->custom_offsets);
    }
    case ExprKind::Add: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const Expr& k : e->kids) {
            Expr f = fold(k);
            if (f->kind == ExprKind::Add)
                kids.insert(kids.end(), f->kids.begin(), f->kids.end());
            else
                kids.push_back(f);
        }
        return fold_add(std::move(kids));
    }
    case ExprKind::Mul: {
        std::vector<Expr> kids;
        kids.reserve(e->kids.size());
        for (const Expr& k : e->kids) {
            Expr f = fold(k);
            if (f->kind == ExprKind::Mul)
                kids.insert(kids.end(), f->kids.begin(), f->kids.end());
            else
                kids.push_back(f);
        }
        return fold_mul(std::move(kids));
    }
    case ExprKind::Pow:
        return fold_pow(fold(e->kids[0]), fold(e->kids[1]));
    }
    return e;
}

Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& mapping) {
    auto it = mapping.find(e);
    if (it != mapping.end()) return it->second;
    if (e->kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const Expr& k : e->kids) {
        Expr s = substitute(k, mapping);
        changed |= s.get() != k.get();
        kids.push_back(std::move(s));
    }
    if (!changed) return e;
    switch (e->kind) {
    case ExprKind::Add:
        return make_add(std::move(kids));
    case ExprKind::Mul:
        return make_mul(std::move(kids));
    case ExprKind::Pow:
        return make_pow(kids[0], kids[1]);
    case ExprKind::Deriv:
        return make_deriv(kids[0], e->deriv_dim, e->deriv_order, e->fd_order, e->custom_offsets);
    default:
        return e;
    }
}

// --- printing ---------------------------------------------------------------

namespace {

void render_offset(std::ostringstream& os, long off) {
    if (off > 0) os << "+" << off;
    if (off < 0) os << off;
}

void render(std::ostringstream& os, const Expr& e, int parent_prec);

// precedence: add=1, mul=2, pow=3, atom=4
int precedence(const Expr& e) {
    switch (e->kind) {
    case ExprKind::Add:
        return 1;
    case ExprKind::Mul:
        return 2;
    case ExprKind::Pow:
        return 3;
    default:
        return 4;
    }
}

void render_access(std::ostringstream& os, const ExprNode& n) {
    os << n.fn->name() << "[";
    for (size_t i = 0; i < n.idx.size(); ++i) {
        if (i) os << ", ";
        const AccessIndex& ix = n.idx[i];
        switch (ix.dim.kind) {
        case DimKind::Time:
            os << "t";
            render_offset(os, ix.offset);
            break;
        case DimKind::Space:
            if (n.via_points) {
                os << ix.dim.name << "(" << n.via_points->name() << ")";
                render_offset(os, ix.offset);
            } else {
                os << ix.dim.name;
                render_offset(os, ix.offset);
            }
            break;
        case DimKind::Point:
            os << "p";
            render_offset(os, ix.offset);
            break;
        case DimKind::Aux:
            os << ix.offset;
            break;
        }
    }
    os << "]";
}

void render(std::ostringstream& os, const Expr& e, int parent_prec) {
    int prec = precedence(e);
    bool need_paren = prec < parent_prec;
    if (need_paren) os << "(";
    switch (e->kind) {
    case ExprKind::RationalC:
        if (e->rat < 0 && parent_prec >= 2 && !need_paren) {
            os << "(" << rational_str(e->rat) << ")";
        } else {
            os << rational_str(e->rat);
        }
        break;
    case ExprKind::FloatC: {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", e->fval);
        os << buf;
        break;
    }
    case ExprKind::Sym:
        os << e->sym;
        break;
    case ExprKind::Access:
        render_access(os, *e);
        break;
    case ExprKind::Add:
        for (size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << " + ";
            render(os, e->kids[i], 1);
        }
        break;
    case ExprKind::Mul:
        for (size_t i = 0; i < e->kids.size(); ++i) {
            if (i) os << "*";
            render(os, e->kids[i], 2);
        }
        break;
    case ExprKind::Pow:
        render(os, e->kids[0], 4);
        os << "^";
        render(os, e->kids[1], 4);
        break;
    case ExprKind::Deriv:
        os << "D(";
        render(os, e->kids[0], 0);
        os << ", " << e->deriv_dim.name << ", n=" << e->deriv_order << ", fd=" << e->fd_order;
        if (!e->custom_offsets.empty()) {
            os << ", offsets=[";
            for (size_t i = 0; i < e->custom_offsets.size(); ++i) {
                if (i) os << ",";
                os << e->custom_offsets[i];
            }
            os << "]";
        }
        os << ")";
        break;
    }
    if (need_paren) os << ")";
}

} // namespace

std::string to_string(const Expr& e) {
    std::ostringstream os;
    render(os, e, 0);
    return os.str();
}

// --- queries ------------------------------------------------------------

void collect_accesses(const Expr& e, std::vector<Expr>& out) {
    if (e->kind == ExprKind::Access) {
        out.push_back(e);
        return;
    }
    for (const Expr& k : e->kids) collect_accesses(k, out);
}

void collect_symbols(const Expr& e, std::vector<std::string>& out) {
    if (e->kind == ExprKind::Sym) {
        out.push_back(e->sym);
        return;
    }
    for (const Expr& k : e->kids) collect_symbols(k, out);
}

OpCount count_ops(const Expr& e) {
    OpCount c;
    switch (e->kind) {
    case ExprKind::Add:
        c.adds += static_cast<long>(e->kids.size()) - 1;
        break;
    case ExprKind::Mul:
        c.muls += static_cast<long>(e->kids.size()) - 1;
        break;
    case ExprKind::Pow: {
        const Expr& ex = e->kids[1];
        if (ex->kind == ExprKind::RationalC && is_integer(ex->rat)) {
            long p = static_cast<long>(numerator(ex->rat));
            // x^n as repeated multiplies; negative exponents add one division
            long m = std::abs(p) >= 2 ? std::abs(p) - 1 : 0;
            if (p < 0) m += 1;
            c.muls += m;
        } else {
            c.muls += 1;
        }
        break;
    }
    default:
        break;
    }
    for (const Expr& k : e->kids) {
        OpCount kc = count_ops(k);
        c.adds += kc.adds;
        c.muls += kc.muls;
    }
    return c;
}

} // namespace sf
