#pragma once

#include <memory>
#include <vector>

#include "sf/function.hpp"
#include "sf/grid.hpp"

namespace sf {

enum class DampProfile { Linear, Quadratic };

// Absorbing-mask field on `grid`: zero strictly inside the physical domain
// (nbl nodes in from every face), ramping monotonically to eta_max at the
// outermost node of each face. Contributions from the two sides of each axis
// are summed, so corners damp harder. Units 1/ms when spacing is in m and
// velocities in m/ms.
std::shared_ptr<Function> build_damping(const std::shared_ptr<Grid>& grid, long nbl,
                                        double v_max,
                                        DampProfile profile = DampProfile::Quadratic,
                                        int space_order = 2);

// Acoustic medium on a grid padded by nbl absorbing nodes per side. Velocity
// is given on the physical shape in m/ms (km/s) and edge-extended into the
// layer; m = 1/v^2 is the squared slowness the operators consume.
class SeismicModel {
public:
    SeismicModel(std::vector<long> shape, std::vector<double> spacing,
                 std::vector<double> origin, const std::vector<double>& velocity,
                 long nbl, int space_order = 8,
                 DampProfile profile = DampProfile::Quadratic);

    const std::shared_ptr<Grid>& grid() const { return grid_; }
    const std::shared_ptr<Function>& m() const { return m_; }
    const std::shared_ptr<Function>& damp() const { return damp_; }
    long nbl() const { return nbl_; }
    int space_order() const { return space_order_; }
    const std::vector<long>& physical_shape() const { return shape_; }

    double v_min() const { return v_min_; }
    double v_max() const { return v_max_; }

    // Largest stable dt (ms) for an explicit order-k scheme:
    //   dt = gamma * min(h) * sqrt(min m) / sqrt(ndim * sum|w| / 2)
    // with w the order-k second-derivative weights and gamma = 1.
    double critical_dt(int space_order, double gamma = 1.0) const;
    double critical_dt() const { return critical_dt(space_order_); }

    // Replaces m with new physical-domain velocities, edge-extending as at
    // construction. Shape must match.
    void set_velocity(const std::vector<double>& velocity);

    // Squared-slowness values over the physical domain only, row-major.
    std::vector<double> physical_m() const;
    void set_physical_m(const std::vector<double>& m_values);

private:
    std::vector<long> shape_;
    std::vector<double> spacing_, origin_;
    long nbl_;
    int space_order_;
    std::shared_ptr<Grid> grid_;
    std::shared_ptr<Function> m_, damp_;
    double v_min_ = 0, v_max_ = 0;
};

} // namespace sf
