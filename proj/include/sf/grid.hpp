#pragma once

#include "sf/error.hpp"

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace sf {

enum class DimKind : unsigned char {
    Space, // grid axis (x, y, z)
    Time,  // stepping axis
    Point, // sparse point enumeration
    Aux    // fixed-extent payload axis (corner weights, coordinate components)
};

// Dimensions are value types identified by name.
struct Dim {
    std::string name;
    DimKind kind = DimKind::Space;

    bool operator==(const Dim& o) const { return name == o.name && kind == o.kind; }
};

// Structured Cartesian grid. `shape` counts grid nodes per axis; the physical
// extent along axis d is (shape[d]-1)*spacing[d]. Coordinates of node i are
// origin[d] + i*spacing[d].
class Grid {
public:
    Grid(std::vector<long> shape, std::vector<double> spacing, std::vector<double> origin)
        : shape_(std::move(shape)), spacing_(std::move(spacing)), origin_(std::move(origin)) {
        if (shape_.empty() || shape_.size() > 3)
            throw ParameterError("grid rank must be 1, 2 or 3");
        if (spacing_.size() != shape_.size() || origin_.size() != shape_.size())
            throw ParameterError("grid shape/spacing/origin rank mismatch");
        for (size_t d = 0; d < shape_.size(); ++d) {
            if (shape_[d] < 2) throw ParameterError("grid extent must be >= 2 nodes");
            if (spacing_[d] <= 0.0) throw ParameterError("grid spacing must be positive");
        }
        static const char* names[3] = {"x", "y", "z"};
        for (size_t d = 0; d < shape_.size(); ++d)
            sdims_.push_back(Dim{names[d], DimKind::Space});
    }

    int ndim() const { return static_cast<int>(shape_.size()); }
    const std::vector<long>& shape() const { return shape_; }
    const std::vector<double>& spacing() const { return spacing_; }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<Dim>& space_dims() const { return sdims_; }
    const Dim& space_dim(int d) const { return sdims_.at(d); }
    static Dim time_dim() { return Dim{"t", DimKind::Time}; }

    // Name of the spacing symbol bound at execution ("h_x", "h_y", "h_z").
    std::string spacing_symbol(int d) const { return "h_" + sdims_.at(d).name; }

    double extent(int d) const { return (shape_[d] - 1) * spacing_[d]; }

    size_t points() const {
        size_t n = 1;
        for (long s : shape_) n *= static_cast<size_t>(s);
        return n;
    }

private:
    std::vector<long> shape_;
    std::vector<double> spacing_;
    std::vector<double> origin_;
    std::vector<Dim> sdims_;
};

} // namespace sf
