#include "sf/gridio.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "sf/error.hpp"

namespace sf {

static void put_u32(std::ofstream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

static uint32_t get_u32(std::ifstream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return uint32_t(b[0]) | (uint32_t(b[1]) << 8) | (uint32_t(b[2]) << 16) |
           (uint32_t(b[3]) << 24);
}

void write_grid(const std::string& path, const std::vector<long>& shape,
                const std::vector<double>& data) {
    if (shape.empty() || shape.size() > 255)
        throw ParameterError("write_grid: bad rank");
    size_t n = 1;
    for (long e : shape) {
        if (e < 1) throw ParameterError("write_grid: bad extent");
        n *= size_t(e);
    }
    if (n != data.size()) throw ParameterError("write_grid: shape/data mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ParameterError("write_grid: cannot open " + path);
    os.write("SFGD", 4);
    unsigned char meta[4] = {static_cast<unsigned char>(shape.size()), 0, 0, 0};
    os.write(reinterpret_cast<const char*>(meta), 4);
    for (long e : shape) put_u32(os, uint32_t(e));
    os.write(reinterpret_cast<const char*>(data.data()),
             std::streamsize(n * sizeof(double)));
    if (!os) throw ParameterError("write_grid: write failed for " + path);
}

GridData read_grid(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ParameterError("read_grid: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "SFGD", 4) != 0)
        throw ParameterError("read_grid: bad magic in " + path);
    unsigned char meta[4];
    is.read(reinterpret_cast<char*>(meta), 4);
    if (!is || meta[0] == 0 || meta[1] != 0)
        throw ParameterError("read_grid: unsupported header in " + path);
    GridData g;
    size_t n = 1;
    for (int d = 0; d < meta[0]; ++d) {
        uint32_t e = get_u32(is);
        g.shape.push_back(long(e));
        n *= e;
    }
    g.data.resize(n);
    is.read(reinterpret_cast<char*>(g.data.data()), std::streamsize(n * sizeof(double)));
    if (!is) throw ParameterError("read_grid: truncated payload in " + path);
    return g;
}

void write_traces_csv(const std::string& path, long nt, long npts,
                      const std::vector<double>& traces, double t0, double dt) {
    if (nt < 0 || npts < 0 || traces.size() != size_t(nt) * size_t(npts))
        throw ParameterError("write_traces_csv: shape mismatch");
    std::ofstream os(path);
    if (!os) throw ParameterError("write_traces_csv: cannot open " + path);
    os << "t";
    for (long p = 0; p < npts; ++p) os << ",p" << p;
    os << "\n";
    os.precision(17);
    for (long t = 0; t < nt; ++t) {
        os << (t0 + t * dt);
        for (long p = 0; p < npts; ++p) os << "," << traces[size_t(t) * npts + p];
        os << "\n";
    }
    if (!os) throw ParameterError("write_traces_csv: write failed for " + path);
}

} // namespace sf
