#pragma once

#include <string>
#include <vector>

namespace sf {

// Binary grid container: magic "SFGD", u8 ndim, u8 dtype (0 = f64), u16 zero
// pad, u32 extent per dim, then row-major f64 payload. Little-endian.
void write_grid(const std::string& path, const std::vector<long>& shape,
                const std::vector<double>& data);

struct GridData {
    std::vector<long> shape;
    std::vector<double> data;
};

GridData read_grid(const std::string& path);

// Trace table CSV: header "t,p0,p1,...", one row per time sample.
void write_traces_csv(const std::string& path, long nt, long npts,
                      const std::vector<double>& traces, double t0, double dt);

} // namespace sf
