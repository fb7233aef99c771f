#include "sf/analytic.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>

#include "sf/error.hpp"

namespace sf {

namespace {

// FFTW planning is not thread-safe; execution of a plan on its own buffers is.
std::mutex fftw_mutex;

} // namespace

std::vector<double> analytic_2d(const SeismicModel& model,
                                const std::vector<double>& src_trace, double dt,
                                const std::vector<double>& src_xy,
                                const std::vector<double>& rec_xy,
                                long pad_factor) {
    if (model.grid()->shape().size() != 2)
        throw ParameterError("analytic_2d: 2-D models only");
    if (model.v_max() - model.v_min() > 1e-12 * model.v_max())
        throw ParameterError("analytic_2d: constant-velocity models only");
    if (src_trace.empty() || !(dt > 0.0))
        throw ParameterError("analytic_2d: bad source trace");
    if (src_xy.size() != 2 || rec_xy.empty() || rec_xy.size() % 2 != 0)
        throw ParameterError("analytic_2d: bad coordinates");
    if (pad_factor < 2) throw ParameterError("analytic_2d: pad_factor must be >= 2");
    const double c = model.v_max();
    const long nt = long(src_trace.size());
    const long nrec = long(rec_xy.size() / 2);

    long nfft = 1;
    while (nfft < nt * pad_factor) nfft *= 2;
    const long nf = nfft / 2 + 1;

    std::vector<double> in(nfft, 0.0), out_t(nfft, 0.0);
    std::vector<std::complex<double>> spec(nf), filt(nf);
    for (long i = 0; i < nt; ++i) in[i] = src_trace[i];
    fftw_plan fp, ip;
    {
        std::lock_guard<std::mutex> lk(fftw_mutex);
        fp = fftw_plan_dft_r2c_1d(int(nfft), in.data(),
                                  reinterpret_cast<fftw_complex*>(spec.data()),
                                  FFTW_ESTIMATE);
        ip = fftw_plan_dft_c2r_1d(int(nfft),
                                  reinterpret_cast<fftw_complex*>(filt.data()),
                                  out_t.data(), FFTW_ESTIMATE);
    }
    fftw_execute(fp);

    std::vector<double> traces(size_t(nt) * size_t(nrec), 0.0);
    for (long p = 0; p < nrec; ++p) {
        const double rx = rec_xy[2 * p] - src_xy[0];
        const double ry = rec_xy[2 * p + 1] - src_xy[1];
        const double r = std::sqrt(rx * rx + ry * ry);
        if (!(r > 0.0))
            throw SingularError("analytic_2d: receiver coincides with the source");
        filt[0] = 0.0;
        for (long j = 1; j < nf; ++j) {
            const double w = 2.0 * M_PI * double(j) / (double(nfft) * dt);
            const double kr = w * r / c;
            const std::complex<double> h2(std::cyl_bessel_j(0.0, kr),
                                          -std::cyl_neumann(0.0, kr));
            filt[j] = std::complex<double>(0.0, -M_PI) * h2 * spec[j];
        }
        fftw_execute(ip);
        for (long t = 0; t < nt; ++t)
            traces[size_t(t) * nrec + p] = out_t[t] / double(nfft);
    }
    {
        std::lock_guard<std::mutex> lk(fftw_mutex);
        fftw_destroy_plan(fp);
        fftw_destroy_plan(ip);
    }
    return traces;
}

} // namespace sf
