#pragma once

#include "sf/rational.hpp"

#include <vector>

namespace sf {

// Finite-difference weight set for one derivative on one axis. Weights are
// exact rationals; the 1/h^deriv_order scale is applied where the stencil is
// expanded, not here.
struct WeightSet {
    int deriv_order = 0;
    std::vector<int> offsets;
    std::vector<Rational> weights;
};

// Offsets of the centered stencil of accuracy order k: [-k/2, ..., k/2].
// k must be even and positive.
std::vector<int> centered_offsets(int order);

// Weights w solving the moment conditions
//     sum_j w_j * offset_j^p == p! * [p == deriv_order],  p = 0..n-1
// over the given distinct offsets (n of them, n >= deriv_order+1).
// Solved exactly in rational arithmetic; results are cached per
// (deriv_order, offsets) and safe to request concurrently.
const WeightSet& fd_weights(int deriv_order, const std::vector<int>& offsets);

} // namespace sf
