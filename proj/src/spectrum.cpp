#include "wavecav/spectrum.hpp"

#include "wavecav/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>

namespace wavecav {

namespace {

// FFTW planning is not thread-safe.
std::mutex& plan_mutex()
{
    static std::mutex m;
    return m;
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace

Spectrum magnitude_spectrum(std::span<const double> x, double dt, Window window,
                            std::size_t pad_factor, bool detrend)
{
    require(!x.empty(), "magnitude_spectrum: empty input");
    require(dt > 0.0, "magnitude_spectrum: dt must be positive");
    const std::size_t n = x.size();
    const std::size_t nfft = next_pow2(std::max<std::size_t>(1, pad_factor) * n);

    double mean = detrend ? std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n) : 0.0;

    auto* in = static_cast<double*>(fftw_malloc(sizeof(double) * nfft));
    auto* out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (nfft / 2 + 1)));
    std::unique_ptr<double, decltype(&fftw_free)> in_guard(in, fftw_free);
    std::unique_ptr<fftw_complex, decltype(&fftw_free)> out_guard(out, fftw_free);

    fftw_plan plan;
    {
        std::lock_guard lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(nfft), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t i = 0; i < nfft; ++i) {
        if (i >= n) {
            in[i] = 0.0;
            continue;
        }
        double w = 1.0;
        if (window == Window::hann && n > 1)
            w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                     static_cast<double>(n - 1));
        in[i] = (x[i] - mean) * w;
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(plan_mutex());
        fftw_destroy_plan(plan);
    }

    Spectrum s;
    s.df = 1.0 / (static_cast<double>(nfft) * dt);
    s.magnitude.resize(nfft / 2 + 1);
    for (std::size_t k = 0; k < s.magnitude.size(); ++k)
        s.magnitude[k] = std::hypot(out[k][0], out[k][1]);
    return s;
}

double parabolic_peak_offset(const std::vector<double>& magnitude, std::size_t bin)
{
    if (bin == 0 || bin + 1 >= magnitude.size()) return 0.0;
    const double tiny = 1e-300;
    double a = std::log(magnitude[bin - 1] + tiny);
    double b = std::log(magnitude[bin] + tiny);
    double c = std::log(magnitude[bin + 1] + tiny);
    double denom = a - 2.0 * b + c;
    if (denom >= 0.0) return 0.0;
    return std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
}

}  // namespace wavecav
