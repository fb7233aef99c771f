#pragma once

#include <stdexcept>
#include <string>

namespace sf {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Derivative/stencil order requests that cannot be satisfied
// (odd centered order, too few offsets, duplicate offsets, ...).
struct OrderError : Error {
    using Error::Error;
};

// solve_linear target appears nonlinearly (inside pow, products of itself, ...).
struct NotLinearError : Error {
    using Error::Error;
};

// Linear solve with a structurally zero coefficient.
struct SingularError : Error {
    using Error::Error;
};

// Sparse point placed outside the grid domain.
struct LocationError : Error {
    using Error::Error;
};

// Equation set cannot be scheduled (mixed time directions,
// same-step read-after-write across space points, ...).
struct SchedulingError : Error {
    using Error::Error;
};

// Execution bindings incomplete or shaped wrong.
struct BindingError : Error {
    using Error::Error;
};

// Bad user-supplied parameter (tile size out of range, empty candidate set, ...).
struct ParameterError : Error {
    using Error::Error;
};

// Numerical blow-up detected at run time (NaN in an updated field),
// or a time step that violates the stability limit.
struct StabilityError : Error {
    using Error::Error;
};

// Feature requires something the host lacks (e.g. no C compiler on PATH).
struct CapabilityError : Error {
    using Error::Error;
};

} // namespace sf
