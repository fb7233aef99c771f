#pragma once

#include "sf/expr.hpp"

#include <vector>

namespace sf {

// lhs must be an Access (dense field element, trace element, or symbol-valued
// temporary during lowering). `accumulate` turns the assignment into `+=`.
// `margins[d]` shrinks the iteration range of space axis d by that many nodes
// on each side; used to hold Dirichlet boundary values in place.
struct Equation {
    Expr lhs;
    Expr rhs;
    bool accumulate = false;
    std::vector<long> margins;

    Equation() = default;
    Equation(Expr l, Expr r, bool acc = false) : lhs(std::move(l)), rhs(std::move(r)), accumulate(acc) {}

    Equation with_margins(std::vector<long> m) const {
        Equation e = *this;
        e.margins = std::move(m);
        return e;
    }
};

inline Equation Eq(Expr lhs, Expr rhs) { return Equation(std::move(lhs), std::move(rhs)); }

} // namespace sf
