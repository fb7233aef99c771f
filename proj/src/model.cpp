#include "sf/model.hpp"

#include <algorithm>
#include <cmath>

#include "sf/error.hpp"
#include "sf/fdcoeff.hpp"

namespace sf {

namespace {

// Walks the full index space of `shape`, row-major.
template <typename Fn>
void for_each_index(const std::vector<long>& shape, Fn&& fn) {
    std::vector<long> idx(shape.size(), 0);
    for (;;) {
        fn(idx);
        size_t d = shape.size();
        while (d > 0) {
            --d;
            if (++idx[d] < shape[d]) break;
            idx[d] = 0;
            if (d == 0) return;
        }
    }
}

double ramp(double w, DampProfile profile) {
    return profile == DampProfile::Linear ? w : w * w;
}

} // namespace

std::shared_ptr<Function> build_damping(const std::shared_ptr<Grid>& grid, long nbl,
                                        double v_max, DampProfile profile,
                                        int space_order) {
    if (nbl < 0) throw ParameterError("build_damping: nbl must be >= 0");
    const auto& shape = grid->shape();
    for (long e : shape)
        if (nbl >= (e + 1) / 2)
            throw ParameterError("build_damping: nbl must be < min(shape)/2");
    auto damp = Function::create("damp", grid, space_order);
    if (nbl == 0) return damp;
    const double eta_gain = v_max * std::log(1000.0);
    for_each_index(shape, [&](const std::vector<long>& idx) {
        double eta = 0.0;
        for (size_t d = 0; d < shape.size(); ++d) {
            double eta_max = eta_gain / (double(nbl) * grid->spacing()[d]);
            long dist = std::min(idx[d], shape[d] - 1 - idx[d]);
            if (dist < nbl) eta += eta_max * ramp(double(nbl - dist) / double(nbl), profile);
        }
        damp->at(idx) = eta;
    });
    return damp;
}

SeismicModel::SeismicModel(std::vector<long> shape, std::vector<double> spacing,
                           std::vector<double> origin,
                           const std::vector<double>& velocity, long nbl,
                           int space_order, DampProfile profile)
    : shape_(std::move(shape)), spacing_(std::move(spacing)),
      origin_(std::move(origin)), nbl_(nbl), space_order_(space_order) {
    if (shape_.empty() || shape_.size() != spacing_.size() ||
        shape_.size() != origin_.size())
        throw ParameterError("SeismicModel: rank mismatch");
    if (nbl_ < 0) throw ParameterError("SeismicModel: nbl must be >= 0");
    std::vector<long> padded = shape_;
    std::vector<double> porigin = origin_;
    for (size_t d = 0; d < shape_.size(); ++d) {
        padded[d] += 2 * nbl_;
        porigin[d] -= nbl_ * spacing_[d];
    }
    grid_ = std::make_shared<Grid>(padded, spacing_, porigin);
    m_ = Function::create("m", grid_, space_order_);
    set_velocity(velocity);
    damp_ = build_damping(grid_, nbl_, v_max_, profile, space_order_);
}

void SeismicModel::set_velocity(const std::vector<double>& velocity) {
    size_t n = 1;
    for (long e : shape_) n *= size_t(e);
    if (velocity.size() != n)
        throw ParameterError("SeismicModel: velocity size does not match shape");
    v_min_ = velocity[0];
    v_max_ = velocity[0];
    for (double v : velocity) {
        if (!(v > 0.0)) throw ParameterError("SeismicModel: velocity must be positive");
        v_min_ = std::min(v_min_, v);
        v_max_ = std::max(v_max_, v);
    }
    for_each_index(grid_->shape(), [&](const std::vector<long>& idx) {
        size_t flat = 0;
        for (size_t d = 0; d < shape_.size(); ++d) {
            long p = std::clamp(idx[d] - nbl_, 0L, shape_[d] - 1);
            flat = flat * size_t(shape_[d]) + size_t(p);
        }
        double v = velocity[flat];
        m_->at(idx) = 1.0 / (v * v);
    });
}

double SeismicModel::critical_dt(int space_order, double gamma) const {
    const WeightSet& ws = fd_weights(2, centered_offsets(space_order));
    double wsum = 0.0;
    for (const Rational& w : ws.weights) wsum += std::abs(to_double(w));
    double h_min = *std::min_element(spacing_.begin(), spacing_.end());
    double m_min = 1.0 / (v_max_ * v_max_);
    return gamma * h_min * std::sqrt(m_min) /
           std::sqrt(double(shape_.size()) * wsum / 2.0);
}

std::vector<double> SeismicModel::physical_m() const {
    std::vector<double> out;
    for_each_index(shape_, [&](const std::vector<long>& idx) {
        std::vector<long> p(idx);
        for (size_t d = 0; d < p.size(); ++d) p[d] += nbl_;
        out.push_back(m_->at(p));
    });
    return out;
}

void SeismicModel::set_physical_m(const std::vector<double>& m_values) {
    size_t n = 1;
    for (long e : shape_) n *= size_t(e);
    if (m_values.size() != n)
        throw ParameterError("SeismicModel: m size does not match shape");
    for (double mv : m_values)
        if (!(mv > 0.0)) throw ParameterError("SeismicModel: m must be positive");
    // m values are stored verbatim so the roundtrip through physical_m is
    // exact; only the velocity stats go through the sqrt.
    v_min_ = 1.0 / std::sqrt(m_values[0]);
    v_max_ = v_min_;
    for (double mv : m_values) {
        double v = 1.0 / std::sqrt(mv);
        v_min_ = std::min(v_min_, v);
        v_max_ = std::max(v_max_, v);
    }
    for_each_index(grid_->shape(), [&](const std::vector<long>& idx) {
        size_t flat = 0;
        for (size_t d = 0; d < shape_.size(); ++d) {
            long p = std::clamp(idx[d] - nbl_, 0L, shape_[d] - 1);
            flat = flat * size_t(shape_[d]) + size_t(p);
        }
        m_->at(idx) = m_values[flat];
    });
}

} // namespace sf
