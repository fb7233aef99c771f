#pragma once

#include "sf/equation.hpp"
#include "sf/expr.hpp"

namespace sf {

// Replaces every Deriv placeholder by its finite-difference expansion:
//   sum_j w_j * shifted_access  *  h^(-deriv_order)
// with exact rational weights from fd_weights. Offsets come from the node's
// custom list when present, otherwise the centered stencil of the node's fd
// order. Derivatives of sums and rational multiples distribute linearly;
// anything else under a Deriv is rejected.
Expr expand_derivatives(const Expr& e);

inline Equation expand_derivatives(const Equation& eq) {
    Equation out = eq;
    out.lhs = fold(expand_derivatives(eq.lhs));
    out.rhs = fold(expand_derivatives(eq.rhs));
    return out;
}

} // namespace sf
