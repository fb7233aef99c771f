#pragma once

#include "sf/grid.hpp"
#include "sf/rational.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace sf {

class FunctionBase;
class SparseFunction;

enum class ExprKind : unsigned char {
    RationalC, // exact rational constant
    FloatC,    // double constant (enters only through user values)
    Sym,       // scalar symbol bound at execution (dt, h_x, user constants)
    Access,    // field element reference with per-dimension integer offsets
    Add,       // n-ary sum
    Mul,       // n-ary product
    Pow,       // kids[0] ^ kids[1]
    Deriv      // derivative placeholder, expanded before lowering
};

class ExprNode;
using Expr = std::shared_ptr<const ExprNode>;

// One index entry of an Access, aligned with the function's dimension list.
//   Time dim:             index = t + offset (mapped to a slot by the field's policy)
//   Space dim (dense):    index = loop var of dim + offset
//   Space dim (via sparse): index = base_table[point][dim] + offset, offset is the corner bit
//   Point dim:            index = point loop var + offset (always 0 in practice)
//   Aux dim:              index = offset (absolute)
struct AccessIndex {
    Dim dim;
    long offset = 0;
};

// Immutable expression node. Nodes are shared and never mutated after
// construction; rewriting passes build new trees.
class ExprNode {
public:
    ExprKind kind;

    // constant payloads
    Rational rat;
    double fval = 0.0;

    // symbol payload
    std::string sym;

    // access payload
    std::shared_ptr<const FunctionBase> fn;
    std::shared_ptr<const SparseFunction> via_points; // non-null: located through sparse point tables
    std::vector<AccessIndex> idx;

    // derivative payload (kids[0] is the target)
    Dim deriv_dim{};
    int deriv_order = 0;
    int fd_order = 0;
    std::vector<int> custom_offsets; // one-sided stencils; empty means centered

    std::vector<Expr> kids;

    size_t hash = 0;

    bool is_rational(const Rational& v) const { return kind == ExprKind::RationalC && rat == v; }
    bool is_zero() const { return kind == ExprKind::RationalC && rat == 0; }
    bool is_one() const { return kind == ExprKind::RationalC && rat == 1; }
};

// --- constructors -----------------------------------------------------------

Expr rational(Rational v);
Expr rational(long num, long den = 1);
Expr floatc(double v);
Expr symbol(std::string name);
Expr make_access(std::shared_ptr<const FunctionBase> fn, std::vector<AccessIndex> idx,
                 std::shared_ptr<const SparseFunction> via_points = nullptr);
Expr make_add(std::vector<Expr> kids);
Expr make_mul(std::vector<Expr> kids);
Expr make_pow(Expr base, Expr exp);
Expr make_deriv(Expr target, Dim dim, int deriv_order, int fd_order,
                std::vector<int> custom_offsets = {});

// expression arithmetic (unfolded; call fold() to canonicalize)
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow_int(const Expr& base, long e);

// --- structure --------------------------------------------------------------

// Total order used for canonical sorting. 0 iff structurally equal.
int compare(const Expr& a, const Expr& b);
bool equal(const Expr& a, const Expr& b);

struct ExprLess {
    bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// True if `needle` occurs as a subtree of `e` (structural match).
bool contains(const Expr& e, const Expr& needle);

// --- rewriting --------------------------------------------------------------

// Canonical folding: flattens nested sums/products, folds constant subtrees
// exactly in rationals, collects like terms (rational multiples of a shared
// core) and like factors (shared base, rational exponents), removes
// identities, and orders commutative children deterministically.
Expr fold(const Expr& e);

// Structural substitution: every subtree equal to a key is replaced by the
// mapped value. Keys are matched after no rewriting, so pass canonical forms.
Expr substitute(const Expr& e, const std::map<Expr, Expr, ExprLess>& mapping);

// Deterministic human-readable rendering; used by the IR dump and in tests.
std::string to_string(const Expr& e);

// --- queries ----------------------------------------------------------------

// All Access nodes, in deterministic traversal order.
void collect_accesses(const Expr& e, std::vector<Expr>& out);

// All symbol names referenced.
void collect_symbols(const Expr& e, std::vector<std::string>& out);

// Number of arithmetic operations in the tree (adds, muls; divisions and
// integer powers count as multiplies).
struct OpCount {
    long adds = 0;
    long muls = 0;
    long total() const { return adds + muls; }
};
OpCount count_ops(const Expr& e);

} // namespace sf
