#pragma once

#include "sf/ir.hpp"

namespace sf {

// Common subexpression elimination, block-local. Repeated non-leaf subtrees
// become scalar temps evaluated before the assignments. Subtrees that read a
// field written inside the same block are never extracted.
void cse(Operator& op);

// Groups addends sharing an exact rational coefficient: a*x + a*y -> a*(x+y).
// Applied recursively to every right-hand side and temp.
void factorize_weights(Operator& op);

// Moves time-invariant subtrees out of the time loop. Subtrees built from
// symbols alone become per-run scalars; subtrees reading dense fields that
// the operator never writes become arrays filled by a prologue nest.
void hoist_invariants(Operator& op);

// Splits the space loops of every dense nest into tile/intra-tile pairs.
// tiles[i] applies to the i-th space loop of a nest, outermost first; nests
// deeper than the list keep their remaining loops untiled. The iteration set
// is preserved exactly, remainders included; a tile at least as large as the
// extent leaves a single block. Any tile < 1 is a parameter error.
void block_loops(Operator& op, const std::vector<long>& tiles);

// Arithmetic per interior point of the main (dense, non-prologue) blocks.
OpCount flop_count(const Operator& op);

// Operational intensity estimate in flops/byte: flop_count over one 8-byte
// stream per distinct field touched by the main dense blocks.
double oi_estimate(const Operator& op);

// Fills op.metrics from flop_count / oi_estimate.
void refresh_metrics(Operator& op);

} // namespace sf
