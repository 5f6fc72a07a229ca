#pragma once

#include "wavecav/time_series.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

namespace wavecav {

struct RosslerParams {
    double a = 0.5;
    double b = 2.1;
    double c = 3.5;
    double dt = 0.03;  // integration step, Rossler time units
    std::array<double, 3> initial{1.0, 1.0, 1.0};
};

/// Right-hand side (x', y', z') of the Rossler system.
std::array<double, 3> rossler_derivative(const std::array<double, 3>& s, const RosslerParams& p);

/// One classical RK4 step.
std::array<double, 3> rossler_rk4_step(const std::array<double, 3>& s, const RosslerParams& p);

/// Samples 0..n_steps-1 of the RK4 trajectory; sample 0 is the initial state.
/// Channels x, y, z; dt = params.dt.
TimeSeries rossler_trajectory(const RosslerParams& params, std::size_t n_steps);

/// Period of the lowest pronounced spectral peak of channel `channel`, in units of
/// series.dt. Hann window, 8x zero padding, log-parabolic peak interpolation.
/// A peak is pronounced when it is a local maximum at least 3x the median magnitude
/// and at least a quarter of the global maximum.
double estimate_t_osc(const TimeSeries& series, Index channel = 0);

/// Exact Henon iteration; sample 0 is (x0, y0). dt = 1.
TimeSeries henon_orbit(std::size_t n_steps, double x0, double y0);

/// NARMA-10 target aligned with its input: out[n] = y(n+1), computed from u(n), u(n-9)
/// and y(n..n-9), with all history before index 0 equal to zero.
TimeSeries narma10_target(const TimeSeries& u);

/// Channel-equalization pair: `symbols` d(n) drawn from {-3,-1,1,3} and the multipath
/// channel output `received` q(n). d is zero outside the generated range.
struct NceSequences {
    TimeSeries symbols;
    TimeSeries received;
};

NceSequences nce_sequences(std::size_t n_steps, std::uint64_t seed,
                           std::optional<double> noise_snr_db = std::nullopt);

/// Noiseless channel applied to a given symbol sequence (exposed for linearity checks).
std::vector<double> nce_channel(std::span<const double> d);

inline constexpr std::array<double, 10> kNceTaps{0.08, -0.12, 1.0,  0.18, -0.1,
                                                 0.091, -0.05, 0.04, 0.03, 0.01};
inline constexpr int kNceLead = 2;  // taps[0] multiplies d(n+2)

/// u = sin(2 pi f0 t), target = shape(2 pi f0 t), sampled samples_per_period times per
/// period (dt = 1/(f0 * samples_per_period)). The default shape is sin^3.
struct FunctionPair {
    TimeSeries input;
    TimeSeries target;
};

FunctionPair function_simulator_pair(double f0, std::size_t n_periods,
                                     std::size_t samples_per_period,
                                     const std::function<double(double)>& shape = {});

/// Zero-order hold of each task value for t_bin at rate waveform_dt. Output sample i
/// takes task sample floor((i + 1/2) * waveform_dt / t_bin).
TimeSeries encode_waveform(const TimeSeries& series, double t_bin, double waveform_dt);

/// Last waveform sample whose midpoint lies before `position` (measured in samples
/// from the waveform start). With bins of r samples, bin n ends at position (n+1)*r.
Index last_sample_before(double position);

/// Input/target pair ready for the reservoir, with the sample budget split into
/// washout, train and test windows (in that order).
struct TaskDataset {
    std::string task;
    TimeSeries input;
    TimeSeries target;
    Index washout_len = 0;
    Index train_len = 0;
    Index test_len = 0;

    ColumnRange washout_cols() const { return {0, washout_len}; }
    ColumnRange train_cols() const { return {washout_len, washout_len + train_len}; }
    ColumnRange test_cols() const
    {
        return {washout_len + train_len, washout_len + train_len + test_len};
    }
    void validate() const;
};

void write_dataset_csv(const std::filesystem::path& path, const TaskDataset& ds);
TaskDataset read_dataset_csv(const std::filesystem::path& path);

/// Task names accepted by make_task_dataset.
inline constexpr std::array<const char*, 5> kTaskNames{"rossler", "henon", "nce", "function",
                                                       "narma10"};

struct TaskSpec {
    std::string name = "narma10";
    Index train_len = 4000;
    Index test_len = 1000;
    Index washout_len = 0;
    std::uint64_t seed = 1;
    // rossler
    Index samples_per_tosc = 20;
    double train_periods = 200;
    double test_periods = 50;
    // nce
    std::optional<double> noise_snr_db;
    // function simulator
    double function_f0 = 4e9;
    Index function_periods = 300;
    Index samples_per_period = 16;
    double train_fraction = 0.8;
};

/// Builds the dataset for `spec.name`. Sample counts for rossler and function tasks are
/// derived from periods and fractions; washout is prepended to the data budget.
TaskDataset make_task_dataset(const TaskSpec& spec);

}  // namespace wavecav
