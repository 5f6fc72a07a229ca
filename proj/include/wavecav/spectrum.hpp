#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wavecav {

enum class Window { rectangular, hann };

/// One-sided DFT magnitude. Bin i sits at frequency i * df.
struct Spectrum {
    std::vector<double> magnitude;
    double df = 0.0;

    double frequency(std::size_t bin) const { return static_cast<double>(bin) * df; }
};

/// FFT magnitude of `x` (mean removed when `detrend`), zero-padded to the next power of
/// two >= pad_factor * x.size().
Spectrum magnitude_spectrum(std::span<const double> x, double dt, Window window = Window::hann,
                            std::size_t pad_factor = 1, bool detrend = true);

/// Fractional offset in (-0.5, 0.5) of a peak at `bin`, from a parabola through the
/// log magnitudes of bins bin-1, bin, bin+1.
double parabolic_peak_offset(const std::vector<double>& magnitude, std::size_t bin);

}  // namespace wavecav
