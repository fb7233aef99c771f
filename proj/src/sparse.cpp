#include "sf/sparse.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sf/error.hpp"

namespace sf {

std::shared_ptr<SparseFunction> SparseFunction::create(std::string name,
                                                       std::shared_ptr<const Grid> grid,
                                                       std::vector<double> coords, long nt) {
    if (!grid) throw ParameterError("sparse function needs a grid");
    if (nt < 1) throw ParameterError("sparse function needs nt >= 1");
    std::size_t nd = grid->ndim();
    if (coords.empty() || coords.size() % nd != 0)
        throw ParameterError("coordinate list size must be a multiple of grid rank");
    return std::shared_ptr<SparseFunction>(
        new SparseFunction(std::move(name), std::move(grid), std::move(coords), nt));
}

SparseFunction::SparseFunction(std::string name, std::shared_ptr<const Grid> grid,
                               std::vector<double> coords, long nt)
    : name_(std::move(name)), grid_(std::move(grid)), coords_(std::move(coords)),
      npoints_(static_cast<long>(coords_.size() / grid_->ndim())), nt_(nt),
      pdim_{"p_" + name_, DimKind::Point} {
    Dim tdim = Grid::time_dim();
    Dim cdim{"c_" + name_, DimKind::Aux};
    data_ = RawField::create(name_, grid_, {tdim, pdim_}, {nt_, npoints_}, {0, 0});
    weights_ = RawField::create(name_ + "_w", grid_, {pdim_, cdim},
                                {npoints_, static_cast<long>(corners())}, {0, 0});
}

void SparseFunction::locate() {
    if (located_) return;
    std::size_t nd = grid_->ndim();
    int nc = corners();
    base_.assign(static_cast<std::size_t>(npoints_) * nd, 0);
    std::vector<double> frac(nd);
    for (long p = 0; p < npoints_; ++p) {
        for (std::size_t d = 0; d < nd; ++d) {
            double rel = (coord(p, d) - grid_->origin()[d]) / grid_->spacing()[d];
            double last = static_cast<double>(grid_->shape()[d] - 1);
            // Tolerate roundoff from coordinate arithmetic at the domain faces.
            double tol = 1e-9 * std::max(1.0, last);
            if (rel < -tol || rel > last + tol) {
                char buf[160];
                std::snprintf(buf, sizeof buf, "%s point %ld axis %zu: coordinate %g outside domain",
                              name_.c_str(), p, d, coord(p, d));
                throw LocationError(buf);
            }
            if (rel < 0) rel = 0;
            if (rel > last) rel = last;
            long b = static_cast<long>(std::floor(rel));
            // Points on the far face still need a full cell to their right.
            if (b > grid_->shape()[d] - 2) b = grid_->shape()[d] - 2;
            base_[p * nd + d] = b;
            frac[d] = rel - static_cast<double>(b);
        }
        for (int c = 0; c < nc; ++c) {
            double w = 1.0;
            for (std::size_t d = 0; d < nd; ++d)
                w *= (c >> d & 1) ? frac[d] : 1.0 - frac[d];
            weights_->data()[p * nc + c] = w;
        }
    }
    located_ = true;
}

Expr SparseFunction::trace_at(long time_off) const {
    std::vector<AccessIndex> idx;
    idx.push_back({Grid::time_dim(), time_off});
    idx.push_back({pdim_, 0});
    return make_access(data_, std::move(idx));
}

Expr SparseFunction::weight_at(int corner) const {
    if (corner < 0 || corner >= corners()) throw ParameterError("corner index out of range");
    std::vector<AccessIndex> idx;
    idx.push_back({pdim_, 0});
    idx.push_back({weights_->dims()[1], corner});
    return make_access(weights_, std::move(idx));
}

// Rebinds a zero-offset dense access to cell corner `corner`, routing its
// space indices through this cloud's base table.
Expr SparseFunction::corner_access(const Expr& access, int corner) const {
    const ExprNode& a = *access;
    std::vector<AccessIndex> idx = a.idx;
    int sd = 0;
    for (auto& ai : idx) {
        if (ai.dim.kind != DimKind::Space) continue;
        if (ai.offset != 0)
            throw ParameterError("dense access inside a point equation must have zero space offsets");
        ai.offset = corner >> sd & 1;
        ++sd;
    }
    if (sd != static_cast<int>(grid_->ndim()))
        throw ParameterError("dense access rank does not match point cloud grid");
    return make_access(a.fn, std::move(idx), shared_from_this());
}

Expr SparseFunction::rewrite_through_points(const Expr& e, int corner) const {
    const ExprNode& n = *e;
    if (n.kind == ExprKind::Access) {
        if (!n.fn) throw ParameterError("access without a field");
        bool dense = !n.via_points && n.fn->space_rank() > 0;
        return dense ? corner_access(e, corner) : e;
    }
    if (n.kids.empty()) return e;
    std::vector<Expr> kids;
    kids.reserve(n.kids.size());
    bool changed = false;
    for (const auto& k : n.kids) {
        Expr r = rewrite_through_points(k, corner);
        changed |= r != k;
        kids.push_back(std::move(r));
    }
    if (!changed) return e;
    switch (n.kind) {
    case ExprKind::Add: return make_add(std::move(kids));
    case ExprKind::Mul: return make_mul(std::move(kids));
    case ExprKind::Pow: return make_pow(kids[0], kids[1]);
    default: throw ParameterError("derivatives must be expanded before point rewriting");
    }
}

Equation SparseFunction::interpolate(const Expr& expr, long lhs_time_off) const {
    std::vector<Expr> terms;
    terms.reserve(corners());
    for (int c = 0; c < corners(); ++c)
        terms.push_back(weight_at(c) * rewrite_through_points(expr, c));
    return Equation(trace_at(lhs_time_off), make_add(std::move(terms)));
}

std::vector<Equation> SparseFunction::inject(const Expr& target, const Expr& expr) const {
    if (target->kind != ExprKind::Access || !target->fn || target->fn->space_rank() == 0)
        throw ParameterError("injection target must be a dense field access");
    std::vector<Equation> eqs;
    eqs.reserve(corners());
    for (int c = 0; c < corners(); ++c) {
        Equation eq(corner_access(target, c),
                    weight_at(c) * rewrite_through_points(expr, c));
        eq.accumulate = true;
        eqs.push_back(std::move(eq));
    }
    return eqs;
}

void write_traces_csv(const std::string& path, const SparseFunction& s,
                      const std::vector<double>& times) {
    if (static_cast<long>(times.size()) != s.nt())
        throw ParameterError("time axis length does not match trace length");
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << "t";
    for (long p = 0; p < s.npoints(); ++p) out << ",p" << p;
    out << "\n";
    char buf[32];
    for (long t = 0; t < s.nt(); ++t) {
        std::snprintf(buf, sizeof buf, "%.17g", times[t]);
        out << buf;
        for (long p = 0; p < s.npoints(); ++p) {
            std::snprintf(buf, sizeof buf, "%.17g", s.trace(t, p));
            out << ',' << buf;
        }
        out << "\n";
    }
}

void read_traces_csv(const std::string& path, SparseFunction& s, std::vector<double>* times) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": missing header");
    if (times) times->clear();
    long t = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (t >= s.nt()) throw Error(path + ": more rows than trace steps");
        std::istringstream row(line);
        std::string cell;
        if (!std::getline(row, cell, ',')) throw Error(path + ": short row");
        if (times) times->push_back(std::stod(cell));
        for (long p = 0; p < s.npoints(); ++p) {
            if (!std::getline(row, cell, ',')) throw Error(path + ": short row");
            s.trace(t, p) = std::stod(cell);
        }
        ++t;
    }
    if (t != s.nt()) throw Error(path + ": fewer rows than trace steps");
}

void write_coords_csv(const std::string& path, const SparseFunction& s) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    std::size_t nd = s.grid()->ndim();
    for (std::size_t d = 0; d < nd; ++d) out << (d ? "," : "") << s.grid()->space_dim(d).name;
    out << "\n";
    char buf[32];
    for (long p = 0; p < s.npoints(); ++p) {
        for (std::size_t d = 0; d < nd; ++d) {
            std::snprintf(buf, sizeof buf, "%.17g", s.coord(p, d));
            out << (d ? "," : "") << buf;
        }
        out << "\n";
    }
}

std::vector<double> read_coords_csv(const std::string& path, std::size_t ndim) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw Error(path + ": missing header");
    std::vector<double> coords;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        for (std::size_t d = 0; d < ndim; ++d) {
            if (!std::getline(row, cell, ',')) throw Error(path + ": short row");
            coords.push_back(std::stod(cell));
        }
    }
    if (coords.empty()) throw Error(path + ": no points");
    return coords;
}

} // namespace sf
