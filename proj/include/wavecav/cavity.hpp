#pragma once

#include "wavecav/time_series.hpp"
#include "wavecav/types.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wavecav {

inline constexpr double kSpeedOfLight = 299792458.0;

struct CavityConfig {
    double area = 0.115;         // m^2
    double f0 = 4e9;             // band center, Hz
    double bandwidth = 4e9;      // Hz
    double t_decay = 600e-12;    // field-amplitude e-folding time, s
    Index n_ports = 3;
    double mode_density_scale = 1.0;

    void validate() const;
};

/// Soft rectifier at each output port:
///   g(v) = (1 - alpha) * knee * softplus((v - threshold) / knee) + alpha * v - g(0).
/// threshold = 0 gives the plain smoothed half-wave rectifier.
struct DiodeParams {
    double reverse_slope = 0.1;  // alpha in [0, 1)
    double knee = 0.01;          // epsilon > 0, volts
    double threshold = 0.0;      // turn-on voltage, volts

    void validate() const;
};

double diode(double v, const DiodeParams& params);

/// Realized cavity: K damped modes, x'' + 2 gamma x' + w_k^2 x = b_k u(t), observed at
/// N0 ports through v_p = port_gain * sum_k C_pk x_k'.
struct ModalReservoir {
    std::vector<double> mode_freqs;        // angular, rad/s
    double damping = 0.0;                  // gamma, 1/s (field amplitude rate)
    std::vector<double> input_couplings;   // b_k
    Matrix port_couplings;                 // N0 x K, unit-norm rows
    DiodeParams diode;
    double port_gain = 1.0;
    double band_lo = 0.0;                  // rad/s
    double band_hi = 0.0;                  // rad/s
    std::uint64_t seed = 0;

    Index n_modes() const { return static_cast<Index>(mode_freqs.size()); }
    Index n_ports() const { return port_couplings.rows(); }
    double max_frequency_hz() const;
    void validate() const;
};

/// Expected mode count from the 2-D Weyl law, round(scale * 2 pi A f0 B / c^2).
Index weyl_mode_count(const CavityConfig& config);

/// Mode frequencies by unfolding Wigner-surmise spacings onto the Weyl density;
/// couplings i.i.d. standard normal, port rows normalized. gamma = 1 / t_decay.
/// Throws band_too_narrow when fewer than 10 modes fall in the band.
ModalReservoir build_cavity(const CavityConfig& config, std::uint64_t seed);

/// Mode amplitudes and velocities.
struct ModeState {
    std::vector<double> a;
    std::vector<double> adot;

    static ModeState zeros(Index k) { return {std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)}; }
};

/// Exact zero-order-hold transition for one mode over a step h:
///   [a; a']_{n+1} = phi [a; a']_n + gamma_in * u_n
struct ModeStep {
    double p00, p01, p10, p11;
    double g0, g1;
};

ModeStep mode_step(double omega, double gamma, double coupling, double h);

/// Linear (pre-diode) port voltages, N0 channels, sample i taken after drive sample i
/// has been applied. Starts from `initial` (zeros when empty). Optionally returns the
/// final modal state.
TimeSeries simulate_linear(const ModalReservoir& reservoir, const TimeSeries& drive,
                           Execution exec = Execution::parallel, const ModeState* initial = nullptr,
                           ModeState* final_state = nullptr);

/// Diode-mapped port voltages.
TimeSeries simulate(const ModalReservoir& reservoir, const TimeSeries& drive,
                    Execution exec = Execution::parallel);

void apply_diode(TimeSeries& ports, const DiodeParams& params);

/// Total modal energy sum_k (a_k'^2 + w_k^2 a_k^2) / 2.
double modal_energy(const ModalReservoir& reservoir, const ModeState& state);

/// Per bin, `taps_per_bin` equally spaced samples of each port; tap j of bin n sits at
/// position n*r + (j+1)*r/taps with r = t_bin/dt samples. Rows are port-major
/// (row = port * taps + tap). `n_bins` < 0 uses floor(duration / t_bin).
Matrix sample_ports(const TimeSeries& port_voltages, double t_bin, Index taps_per_bin,
                    Index n_bins = -1);

/// Time until the port-signal difference between runs from `init_a` and `init_b` falls
/// and stays below 1e-6 of its initial peak (the peak over the first slowest-mode
/// period). Throws echo_state_violation without convergence by 20 / gamma.
double echo_state_check(const ModalReservoir& reservoir, const TimeSeries& drive,
                        const ModeState& init_a, const ModeState& init_b);

/// Diode calibration on a pilot run: sets port_gain so the RMS linear port voltage is 1,
/// then knee and threshold as fractions of that RMS.
struct DiodeCalibration {
    double reverse_slope = 0.1;
    double knee_fraction = 0.01;
    double threshold_fraction = 0.5;
    Index pilot_samples = 40000;
};

void calibrate_diode(ModalReservoir& reservoir, const TimeSeries& drive,
                     const DiodeCalibration& calibration = {});

/// Versioned structured-text (JSON) serialization for exact replay.
void save_reservoir(const std::filesystem::path& path, const ModalReservoir& reservoir);
ModalReservoir load_reservoir(const std::filesystem::path& path);
std::string reservoir_to_json(const ModalReservoir& reservoir);
ModalReservoir reservoir_from_json(const std::string& text);

namespace kernels {

/// Reference implementation: step-by-step, modes in index order.
void port_response_serial(const ModalReservoir& r, std::span<const double> drive, double dt,
                          ModeState& state, Matrix& ports);

/// OpenMP implementation: modes advance independently over time blocks, ports are
/// reduced over modes in index order. Bit-identical to the serial kernel.
void port_response_parallel(const ModalReservoir& r, std::span<const double> drive, double dt,
                            ModeState& state, Matrix& ports);

}  // namespace kernels

}  // namespace wavecav
