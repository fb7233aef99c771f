#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sf/equation.hpp"
#include "sf/expr.hpp"
#include "sf/function.hpp"
#include "sf/grid.hpp"

namespace sf {

// Point cloud living off the grid lattice: sources, receivers, probes.
//
// Each point carries a trace (one value per time step) plus the multilinear
// coupling to the 2^ndim corners of its enclosing cell. locate() resolves
// coordinates once:
//   rel_d  = (coord_d - origin_d) / spacing_d
//   base_d = floor(rel_d), clamped so base_d + 1 stays on the grid
//   frac_d = rel_d - base_d
//   w[c]   = prod_d (bit_d(c) ? frac_d : 1 - frac_d)
// Corner index c uses axis 0 as its least significant bit, so in 2-D the
// corner order is (0,0), (1,0), (0,1), (1,1).
//
// interpolate() and inject() return equations indexed by this cloud's point
// dimension; dense accesses inside them resolve their space indices through
// the per-point base table instead of loop variables.
class SparseFunction : public std::enable_shared_from_this<SparseFunction> {
public:
    // coords is row-major [npoints][ndim], physical units.
    static std::shared_ptr<SparseFunction> create(std::string name,
                                                  std::shared_ptr<const Grid> grid,
                                                  std::vector<double> coords, long nt);

    const std::string& name() const { return name_; }
    const std::shared_ptr<const Grid>& grid() const { return grid_; }
    long npoints() const { return npoints_; }
    long nt() const { return nt_; }
    const Dim& point_dim() const { return pdim_; }
    int corners() const { return 1 << static_cast<int>(grid_->ndim()); }

    double coord(long p, std::size_t d) const { return coords_[p * grid_->ndim() + d]; }

    // Trace storage, [nt][npoints], bound under name().
    const std::shared_ptr<RawField>& traces() const { return data_; }
    double& trace(long t, long p) { return data_->data()[t * npoints_ + p]; }
    double trace(long t, long p) const { return data_->data()[t * npoints_ + p]; }

    // Corner weight table, [npoints][2^ndim], bound under name() + "_w".
    const std::shared_ptr<RawField>& weight_table() const { return weights_; }

    // Enclosing-cell index table, [npoints][ndim]. Valid after locate().
    const std::vector<long>& base_table() const { return base_; }

    // Resolves bases and weights for every point. Idempotent. Throws
    // LocationError if any coordinate falls outside the physical domain.
    void locate();
    bool located() const { return located_; }

    // Trace sample at time offset off: name()[t+off, p].
    Expr trace_at(long time_off = 0) const;

    // Weight of corner c for the current point: name()_w[p, c].
    Expr weight_at(int corner) const;

    // rec[t, p] = sum_c w[p, c] * expr@corner(c). Dense accesses in expr must
    // carry zero space offsets; their indices are rewritten through the base
    // table. Time offsets pass through unchanged.
    Equation interpolate(const Expr& expr, long lhs_time_off = 0) const;

    // One accumulating equation per corner: target@corner(c) += w[p, c] * expr.
    // target must be a dense access with zero space offsets (its time offset
    // selects the written slot). expr may reference this cloud's traces.
    std::vector<Equation> inject(const Expr& target, const Expr& expr) const;

private:
    SparseFunction(std::string name, std::shared_ptr<const Grid> grid,
                   std::vector<double> coords, long nt);

    Expr corner_access(const Expr& access, int corner) const;
    Expr rewrite_through_points(const Expr& e, int corner) const;

    std::string name_;
    std::shared_ptr<const Grid> grid_;
    std::vector<double> coords_;
    long npoints_ = 0;
    long nt_ = 0;
    Dim pdim_;
    std::shared_ptr<RawField> data_;
    std::shared_ptr<RawField> weights_;
    std::vector<long> base_;
    bool located_ = false;
};

// Trace CSV: header "t,p0,p1,...", one row per step. Coordinate CSV: header
// "x[,y[,z]]", one row per point.
void write_traces_csv(const std::string& path, const SparseFunction& s,
                      const std::vector<double>& times);
void read_traces_csv(const std::string& path, SparseFunction& s,
                     std::vector<double>* times = nullptr);
void write_coords_csv(const std::string& path, const SparseFunction& s);
std::vector<double> read_coords_csv(const std::string& path, std::size_t ndim);

} // namespace sf
