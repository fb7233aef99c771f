#pragma once

#include "sf/buffer.hpp"
#include "sf/error.hpp"
#include "sf/expr.hpp"
#include "sf/grid.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sf {

// Discrete field with named dimensions, per-dimension halos and owned storage.
// Memory layout is row-major in dimension order (time slowest, innermost space
// axis contiguous). Space halos hold zeros and are never written by operators.
class FunctionBase : public std::enable_shared_from_this<FunctionBase> {
public:
    virtual ~FunctionBase() = default;

    const std::string& name() const { return name_; }
    const std::shared_ptr<const Grid>& grid() const { return grid_; }
    int space_order() const { return space_order_; }

    const std::vector<Dim>& dims() const { return dims_; }
    const std::vector<long>& extents() const { return extents_; }
    const std::vector<long>& halos() const { return halos_; }

    bool has_time() const { return !dims_.empty() && dims_[0].kind == DimKind::Time; }
    // Buffered time axes wrap modulo time_slots(); saved axes index directly.
    bool time_buffered() const { return time_buffered_; }
    long time_slots() const { return time_slots_; }

    long padded_extent(int d) const { return extents_[d] + 2 * halos_[d]; }

    // Row-major stride (in elements) of dimension d.
    long stride(int d) const {
        long s = 1;
        for (size_t k = d + 1; k < extents_.size(); ++k) s *= padded_extent(static_cast<int>(k));
        return s;
    }

    size_t storage_size() const {
        size_t n = 1;
        for (size_t d = 0; d < extents_.size(); ++d) n *= static_cast<size_t>(padded_extent(static_cast<int>(d)));
        return n;
    }

    AlignedBuffer& data() { return data_; }
    const AlignedBuffer& data() const { return data_; }

    // Field values are runtime state, not part of the symbolic identity;
    // executors write through the const handles stored in expressions.
    double* values() const { return data_.data(); }

    // Element access by logical coordinates (time slot first when present,
    // then interior space coordinates; halo offset applied internally).
    double& at(const std::vector<long>& coords) {
        return data_[flat_index(coords)];
    }
    double at(const std::vector<long>& coords) const { return data_[flat_index(coords)]; }

    size_t flat_index(const std::vector<long>& coords) const {
        if (coords.size() != extents_.size())
            throw ParameterError(name_ + ": coordinate rank mismatch");
        size_t off = 0;
        for (size_t d = 0; d < coords.size(); ++d) {
            long c = coords[d] + halos_[d];
            off += static_cast<size_t>(c) * static_cast<size_t>(stride(static_cast<int>(d)));
        }
        return off;
    }

    // --- expression builders -------------------------------------------------

    // Access with explicit time offset (ignored for fields without a time
    // dimension) and per-axis space offsets.
    Expr at_offsets(long time_off, std::vector<long> space_off) const;

    // All-zero offsets.
    Expr ref() const { return at_offsets(0, std::vector<long>(space_rank(), 0)); }

    int space_rank() const {
        int n = 0;
        for (const Dim& d : dims_)
            if (d.kind == DimKind::Space) ++n;
        return n;
    }

protected:
    FunctionBase(std::string name, std::shared_ptr<const Grid> grid, int space_order,
                 std::vector<Dim> dims, std::vector<long> extents, std::vector<long> halos,
                 bool time_buffered, long time_slots)
        : name_(std::move(name)), grid_(std::move(grid)), space_order_(space_order),
          dims_(std::move(dims)), extents_(std::move(extents)), halos_(std::move(halos)),
          time_buffered_(time_buffered), time_slots_(time_slots) {
        data_.allocate(storage_size());
    }

    std::string name_;
    std::shared_ptr<const Grid> grid_;
    int space_order_ = 0;
    std::vector<Dim> dims_;
    std::vector<long> extents_;
    std::vector<long> halos_;
    bool time_buffered_ = false;
    long time_slots_ = 0;
    mutable AlignedBuffer data_;
};

// Time-independent dense field over a grid's interior with halo space_order/2.
class Function : public FunctionBase {
public:
    static std::shared_ptr<Function> create(std::string name, std::shared_ptr<const Grid> grid,
                                            int space_order) {
        check_order(space_order);
        std::vector<Dim> dims = grid->space_dims();
        std::vector<long> ext = grid->shape();
        std::vector<long> halos(ext.size(), space_order / 2);
        return std::shared_ptr<Function>(
            new Function(std::move(name), std::move(grid), space_order, std::move(dims),
                         std::move(ext), std::move(halos)));
    }

    // Spatial derivative sugar; fd order defaults to the field's space order.
    Expr dx(int axis, int fd_order = 0) const;
    Expr dx2(int axis, int fd_order = 0) const;
    Expr laplace(int fd_order = 0) const;

    static void check_order(int space_order) {
        if (space_order < 2 || space_order % 2 != 0)
            throw OrderError("space order must be a positive even number");
    }

private:
    Function(std::string name, std::shared_ptr<const Grid> grid, int space_order,
             std::vector<Dim> dims, std::vector<long> ext, std::vector<long> halos)
        : FunctionBase(std::move(name), std::move(grid), space_order, std::move(dims),
                       std::move(ext), std::move(halos), false, 0) {}
};

// Dense field with a stepping time axis. Either buffered (time_order+1 slots,
// modulo indexed) or saved (explicit slot count, direct indexed).
class TimeFunction : public FunctionBase {
public:
    static std::shared_ptr<TimeFunction> create(std::string name,
                                                std::shared_ptr<const Grid> grid,
                                                int space_order, int time_order,
                                                std::optional<long> save = std::nullopt) {
        Function::check_order(space_order);
        if (time_order < 1) throw OrderError("time order must be >= 1");
        long slots = save ? *save : time_order + 1;
        if (slots < time_order + 1)
            throw ParameterError("saved history must hold at least time_order+1 slots");
        std::vector<Dim> dims;
        dims.push_back(Grid::time_dim());
        for (const Dim& d : grid->space_dims()) dims.push_back(d);
        std::vector<long> ext;
        ext.push_back(slots);
        for (long s : grid->shape()) ext.push_back(s);
        std::vector<long> halos(ext.size(), space_order / 2);
        halos[0] = 0;
        return std::shared_ptr<TimeFunction>(
            new TimeFunction(std::move(name), std::move(grid), space_order, time_order,
                             std::move(dims), std::move(ext), std::move(halos), !save, slots));
    }

    int time_order() const { return time_order_; }

    Expr forward() const { return at_offsets(1, std::vector<long>(space_rank(), 0)); }
    Expr backward() const { return at_offsets(-1, std::vector<long>(space_rank(), 0)); }

    Expr dt(int fd_order = 2) const;
    Expr dt2() const;
    Expr dx(int axis, int fd_order = 0) const;
    Expr dx2(int axis, int fd_order = 0) const;
    Expr laplace(int fd_order = 0) const;

private:
    TimeFunction(std::string name, std::shared_ptr<const Grid> grid, int space_order,
                 int time_order, std::vector<Dim> dims, std::vector<long> ext,
                 std::vector<long> halos, bool buffered, long slots)
        : FunctionBase(std::move(name), std::move(grid), space_order, std::move(dims),
                       std::move(ext), std::move(halos), buffered, slots),
          time_order_(time_order) {}

    int time_order_ = 0;
};

// Field with caller-chosen dimensions and extents. Backs sparse trace/weight
// tables and compiler-generated temporaries; no derivative sugar.
class RawField : public FunctionBase {
public:
    static std::shared_ptr<RawField> create(std::string name, std::shared_ptr<const Grid> grid,
                                            std::vector<Dim> dims, std::vector<long> extents,
                                            std::vector<long> halos, bool time_buffered = false,
                                            long time_slots = 0) {
        if (dims.size() != extents.size() || dims.size() != halos.size())
            throw ParameterError("raw field dims/extents/halos rank mismatch");
        if (!time_buffered && !dims.empty() && dims[0].kind == DimKind::Time)
            time_slots = extents[0];
        return std::shared_ptr<RawField>(
            new RawField(std::move(name), std::move(grid), std::move(dims), std::move(extents),
                         std::move(halos), time_buffered, time_slots));
    }

private:
    RawField(std::string name, std::shared_ptr<const Grid> grid, std::vector<Dim> dims,
             std::vector<long> ext, std::vector<long> halos, bool buffered, long slots)
        : FunctionBase(std::move(name), std::move(grid), 0, std::move(dims), std::move(ext),
                       std::move(halos), buffered, slots) {}
};

// Named scalar usable in expressions; bound to its value at execution.
struct Constant {
    std::string name;
    double value = 0.0;

    Expr ref() const { return symbol(name); }
};

} // namespace sf
