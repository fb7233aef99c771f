#include "sf/derivative.hpp"

#include "sf/error.hpp"
#include "sf/fdcoeff.hpp"
#include "sf/function.hpp"

namespace sf {

namespace {

Expr expand_deriv_of_access(const ExprNode& d, const Expr& target) {
    const ExprNode& acc = *target;
    std::vector<int> offsets =
        d.custom_offsets.empty() ? centered_offsets(d.fd_order) : d.custom_offsets;
    const WeightSet& ws = fd_weights(d.deriv_order, offsets);

    // locate the axis in the access index list
    size_t axis = acc.idx.size();
    for (size_t i = 0; i < acc.idx.size(); ++i)
        if (acc.idx[i].dim == d.deriv_dim) axis = i;
    if (axis == acc.idx.size())
        throw OrderError("derivative axis " + d.deriv_dim.name + " not a dimension of " +
                         acc.fn->name());

    std::vector<Expr> terms;
    for (size_t j = 0; j < ws.offsets.size(); ++j) {
        if (ws.weights[j] == 0) continue;
        std::vector<AccessIndex> idx = acc.idx;
        idx[axis].offset += ws.offsets[j];
        Expr shifted = make_access(acc.fn, std::move(idx), acc.via_points);
        terms.push_back(make_mul({rational(ws.weights[j]), std::move(shifted)}));
    }
    Expr sum = terms.size() == 1 ? terms[0] : make_add(std::move(terms));

    const std::string h_sym =
        d.deriv_dim.kind == DimKind::Time ? "dt" : "h_" + d.deriv_dim.name;
    return make_mul({std::move(sum), make_pow(symbol(h_sym), rational(-d.deriv_order))});
}

// Distribute a derivative over sums and rational-constant multiples until an
// Access is reached.
Expr expand_deriv(const ExprNode& d, const Expr& target) {
    switch (target->kind) {
    case ExprKind::Access:
        return expand_deriv_of_access(d, target);
    case ExprKind::Add: {
        std::vector<Expr> kids;
        for (const Expr& k : target->kids) kids.push_back(expand_deriv(d, k));
        return make_add(std::move(kids));
    }
    case ExprKind::Mul: {
        std::vector<Expr> consts, rest;
        for (const Expr& k : target->kids) {
            if (k->kind == ExprKind::RationalC || k->kind == ExprKind::FloatC ||
                k->kind == ExprKind::Sym)
                consts.push_back(k);
            else
                rest.push_back(k);
        }
        if (rest.size() != 1)
            throw OrderError("derivative of a general product is not supported");
        consts.push_back(expand_deriv(d, rest[0]));
        return make_mul(std::move(consts));
    }
    case ExprKind::RationalC:
    case ExprKind::FloatC:
        return rational(0);
    default:
        throw OrderError("derivative target must be a field access or a linear "
                         "combination of accesses");
    }
}

} // namespace

Expr expand_derivatives(const Expr& e) {
    if (e->kind == ExprKind::Deriv) {
        Expr target = expand_derivatives(e->kids[0]);
        return expand_deriv(*e, target);
    }
    if (e->kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(e->kids.size());
    bool changed = false;
    for (const Expr& k : e->kids) {
        Expr x = expand_derivatives(k);
        changed |= x.get() != k.get();
        kids.push_back(std::move(x));
    }
    if (!changed) return e;
    switch (e->kind) {
    case ExprKind::Add:
        return make_add(std::move(kids));
    case ExprKind::Mul:
        return make_mul(std::move(kids));
    case ExprKind::Pow:
        return make_pow(kids[0], kids[1]);
    default:
        return e;
    }
}

} // namespace sf
