#include "sf/function.hpp"

namespace sf {

Expr FunctionBase::at_offsets(long time_off, std::vector<long> space_off) const {
    std::vector<AccessIndex> idx;
    size_t s = 0;
    for (const Dim& d : dims_) {
        if (d.kind == DimKind::Time) {
            idx.push_back({d, time_off});
        } else if (d.kind == DimKind::Space) {
            if (s >= space_off.size())
                throw ParameterError(name_ + ": too few space offsets");
            idx.push_back({d, space_off[s++]});
        } else {
            idx.push_back({d, 0});
        }
    }
    if (s != space_off.size()) throw ParameterError(name_ + ": too many space offsets");
    return make_access(shared_from_this(), std::move(idx));
}

namespace {

Expr space_derivative(const FunctionBase& f, int axis, int deriv_order, int fd_order) {
    if (fd_order == 0) fd_order = f.space_order();
    return make_deriv(f.ref(), f.grid()->space_dim(axis), deriv_order, fd_order);
}

Expr laplace_expr(const FunctionBase& f, int fd_order) {
    std::vector<Expr> parts;
    for (int d = 0; d < f.grid()->ndim(); ++d)
        parts.push_back(space_derivative(f, d, 2, fd_order));
    return parts.size() == 1 ? parts[0] : make_add(std::move(parts));
}

} // namespace

Expr Function::dx(int axis, int fd_order) const { return space_derivative(*this, axis, 1, fd_order); }
Expr Function::dx2(int axis, int fd_order) const { return space_derivative(*this, axis, 2, fd_order); }
Expr Function::laplace(int fd_order) const { return laplace_expr(*this, fd_order); }

Expr TimeFunction::dt(int fd_order) const {
    return make_deriv(ref(), Grid::time_dim(), 1, fd_order);
}

Expr TimeFunction::dt2() const { return make_deriv(ref(), Grid::time_dim(), 2, 2); }

Expr TimeFunction::dx(int axis, int fd_order) const { return space_derivative(*this, axis, 1, fd_order); }
Expr TimeFunction::dx2(int axis, int fd_order) const { return space_derivative(*this, axis, 2, fd_order); }
Expr TimeFunction::laplace(int fd_order) const { return laplace_expr(*this, fd_order); }

} // namespace sf
