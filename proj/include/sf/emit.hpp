#pragma once

#include <string>

#include "sf/execute.hpp"
#include "sf/ir.hpp"

namespace sf {

// Renders the operator as one self-contained C99 translation unit. The output
// is deterministic for a given operator, so it can be golden-tested.
std::string emit_c(const Operator& op);

// True when a host C compiler answers on PATH (CC, cc, gcc, clang).
bool emit_backend_available();

// Compiles the emitted source with the host C compiler, loads it, and runs it
// with the same bindings and window semantics as run(). f64 only; kernels are
// cached per source text for the lifetime of the process.
ExecutionReport run_emitted(Operator& op, const RunArgs& args);

} // namespace sf
