#pragma once

#include "sf/equation.hpp"
#include "sf/expr.hpp"

namespace sf {

// Rearranges eq (lhs == rhs) for `target`, which must appear linearly:
//   lhs - rhs == a*target + b   =>   target = -b / a.
// Derivatives are expanded first. Throws NotLinearError when target sits
// inside a power or a product with itself, SingularError when a folds to the
// zero expression.
Expr solve_linear(const Equation& eq, const Expr& target);

} // namespace sf
