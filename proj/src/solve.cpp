#include "sf/solve.hpp"

#include "sf/derivative.hpp"
#include "sf/error.hpp"

namespace sf {

namespace {

// e == a*target + b with target not occurring in a or b.
struct LinParts {
    Expr a;
    Expr b;
};

LinParts decompose(const Expr& e, const Expr& target) {
    if (equal(e, target)) return {rational(1), rational(0)};
    if (!contains(e, target)) return {rational(0), e};
    switch (e->kind) {
    case ExprKind::Add: {
        std::vector<Expr> as, bs;
        for (const Expr& k : e->kids) {
            LinParts p = decompose(k, target);
            as.push_back(std::move(p.a));
            bs.push_back(std::move(p.b));
        }
        return {make_add(std::move(as)), make_add(std::move(bs))};
    }
    case ExprKind::Mul: {
        std::vector<Expr> free;
        Expr carrier;
        for (const Expr& k : e->kids) {
            if (contains(k, target)) {
                if (carrier)
                    throw NotLinearError("target multiplies itself in " + to_string(e));
                carrier = k;
            } else {
                free.push_back(k);
            }
        }
        LinParts p = decompose(carrier, target);
        std::vector<Expr> am = free, bm = std::move(free);
        am.push_back(std::move(p.a));
        bm.push_back(std::move(p.b));
        return {make_mul(std::move(am)), make_mul(std::move(bm))};
    }
    case ExprKind::Pow:
        throw NotLinearError("target appears inside a power in " + to_string(e));
    default:
        throw NotLinearError("target appears nonlinearly in " + to_string(e));
    }
}

} // namespace

Expr solve_linear(const Equation& eq, const Expr& target) {
    Expr residual = fold(expand_derivatives(eq.lhs - eq.rhs));
    LinParts p = decompose(residual, target);
    Expr a = fold(p.a);
    Expr b = fold(p.b);
    if (a->is_zero()) throw SingularError("target coefficient folds to zero");
    return fold(make_mul({rational(-1), std::move(b), make_pow(std::move(a), rational(-1))}));
}

} // namespace sf
