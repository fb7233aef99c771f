#include "sf/fdcoeff.hpp"

#include "sf/error.hpp"

#include <map>
#include <mutex>
#include <shared_mutex>
#include <sstream>

namespace sf {

std::vector<int> centered_offsets(int order) {
    if (order <= 0 || order % 2 != 0)
        throw OrderError("centered stencils require a positive even accuracy order");
    std::vector<int> off;
    for (int j = -order / 2; j <= order / 2; ++j) off.push_back(j);
    return off;
}

namespace {

// Dense rational Gaussian elimination with partial (first nonzero) pivoting.
// Exact at every step; matrix sizes here are at most 13x13.
std::vector<Rational> solve_exact(std::vector<std::vector<Rational>> a, std::vector<Rational> b) {
    const size_t n = b.size();
    for (size_t col = 0; col < n; ++col) {
        size_t piv = col;
        while (piv < n && a[piv][col] == 0) ++piv;
        if (piv == n) throw SingularError("moment system is singular");
        std::swap(a[piv], a[col]);
        std::swap(b[piv], b[col]);
        for (size_t r = col + 1; r < n; ++r) {
            if (a[r][col] == 0) continue;
            Rational f = a[r][col] / a[col][col];
            for (size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<Rational> x(n);
    for (size_t ri = n; ri-- > 0;) {
        Rational s = b[ri];
        for (size_t c = ri + 1; c < n; ++c) s -= a[ri][c] * x[c];
        x[ri] = s / a[ri][ri];
    }
    return x;
}

std::string cache_key(int deriv_order, const std::vector<int>& offsets) {
    std::ostringstream os;
    os << deriv_order << ":";
    for (int o : offsets) os << o << ",";
    return os.str();
}

std::shared_mutex cache_mutex;
std::map<std::string, WeightSet> cache;

} // namespace

const WeightSet& fd_weights(int deriv_order, const std::vector<int>& offsets) {
    if (deriv_order < 1) throw OrderError("derivative order must be >= 1");
    const size_t n = offsets.size();
    if (n < static_cast<size_t>(deriv_order) + 1)
        throw OrderError("stencil needs at least deriv_order+1 offsets");
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (offsets[i] == offsets[j]) throw OrderError("stencil offsets must be distinct");

    const std::string key = cache_key(deriv_order, offsets);
    {
        std::shared_lock lk(cache_mutex);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    // moment matrix: row p is [offset_j^p], rhs p! at the derivative row
    std::vector<std::vector<Rational>> a(n, std::vector<Rational>(n));
    std::vector<Rational> b(n, Rational(0));
    for (size_t p = 0; p < n; ++p)
        for (size_t j = 0; j < n; ++j)
            a[p][j] = rational_pow(Rational(offsets[j]), static_cast<long>(p));
    Rational fact(1);
    for (int q = 2; q <= deriv_order; ++q) fact *= q;
    b[static_cast<size_t>(deriv_order)] = fact;

    WeightSet ws;
    ws.deriv_order = deriv_order;
    ws.offsets = offsets;
    ws.weights = solve_exact(std::move(a), std::move(b));

    std::unique_lock lk(cache_mutex);
    auto [it, inserted] = cache.emplace(key, std::move(ws));
    (void)inserted;
    return it->second;
}

} // namespace sf
