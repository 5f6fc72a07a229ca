#pragma once

#include "wavecav/cavity.hpp"
#include "wavecav/readout.hpp"
#include "wavecav/ret.hpp"
#include "wavecav/tasks.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wavecav {

struct ReadoutConfig {
    std::optional<double> lambda;                  // fixed lambda; grid search when absent
    std::vector<double> lambda_grid = default_lambda_grid();
    double validation_fraction = 0.1;
    std::optional<Index> washout;                  // task steps; default max(10 T_decay/t_bin, 50)
    NmseNormalization normalization = NmseNormalization::truth_power;
};

struct TimingConfig {
    double t_bin = 60e-12;         // s; discrete tasks
    double t_osc = 250e-12;        // s; rossler
    double waveform_dt = 7.5e-12;  // s; upper bound, refined to an integer divisor of t_bin
    Index taps_per_bin = 1;
};

struct SweepConfig {
    std::vector<double> t_axis;      // s: T_bin, or T_osc for rossler
    std::vector<double> decay_axis;  // s
};

struct AblationConfig {
    std::vector<Index> sizes;
    Index n_seeds = 5;
};

struct Seeds {
    std::uint64_t cavity = 1;
    std::uint64_t ensemble = 2;
    std::uint64_t task = 3;
    std::uint64_t ablation = 4;
};

struct ExperimentConfig {
    TaskSpec task;
    CavityConfig cavity;
    DiodeCalibration diode;
    EnsembleSpec ensemble;
    ReadoutConfig readout;
    TimingConfig timing;
    SweepConfig sweep;
    AblationConfig ablation;
    Seeds seeds;
    std::filesystem::path output_dir = "wavecav-out";
    bool write_features = false;

    /// Task-step duration actually used (derived from T_osc or f0 for rossler/function).
    double task_bin() const;
    /// Waveform sample period: t_bin / n with n >= 8 the smallest integer honoring both
    /// timing.waveform_dt and 1/(20 f_max).
    double waveform_dt() const;
    Index washout_steps() const;

    void validate() const;

    /// Applies `seed` to every seed field through independent derivations.
    void override_seeds(std::uint64_t seed);
};

/// Parse a JSON config (times in picoseconds, frequencies in GHz). Missing keys take defaults.
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form: every field present, keys sorted, compact.
std::string canonical_json(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

}  // namespace wavecav
