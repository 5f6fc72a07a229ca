#pragma once

#include "wavecav/cavity.hpp"
#include "wavecav/feature_matrix.hpp"
#include "wavecav/time_series.hpp"

#include <cstdint>
#include <vector>

namespace wavecav {

/// Plan for expanding one cavity into N_b * N_f virtual reservoirs.
struct EnsembleSpec {
    Index n_boundary = 1;
    Index n_freq = 1;
    double perturb_strength = 1.0;  // delta in [0, 1]
    std::vector<double> betas;      // N_f time-scale factors; empty -> default_betas
    std::uint64_t seed = 0;

    /// beta_k = f0 / (f0 + k * step), k = 0..n-1: center-frequency steps of `step` Hz.
    static std::vector<double> default_betas(Index n, double f0 = 4e9, double step = 100e6);

    std::vector<double> resolved_betas(double f0 = 4e9) const;
    void validate() const;
};

/// Jitters mode frequencies by N(0, (delta * mean spacing)^2), reflecting them back into
/// the band, and rotates coupling vectors toward a fresh draw by angle delta * pi / 2.
/// delta = 0 returns the base unchanged.
ModalReservoir boundary_perturb(const ModalReservoir& base, double strength, Index index,
                                std::uint64_t seed);

/// Stretches the drive in time by beta (t -> beta t) at the same sample period using a
/// Kaiser-windowed sinc interpolator (cutoff min(1, beta) of Nyquist). beta = 1 is a copy.
TimeSeries frequency_stir(const TimeSeries& drive, double beta);

struct EnsembleMember {
    ModalReservoir reservoir;
    double beta = 1.0;
    int boundary_index = 0;
    int freq_index = 0;
};

/// Boundary-major list of members. Boundary index 0 is the unperturbed base.
std::vector<EnsembleMember> make_members(const ModalReservoir& base, const EnsembleSpec& spec);

/// Simulates every member on its beta-stretched drive, samples `n_bins` task steps of
/// t_bin * beta each, and stacks rows (member order, then port, then tap) plus the bias.
FeatureMatrix run_members(const std::vector<EnsembleMember>& members, const TimeSeries& drive,
                          double t_bin, Index taps_per_bin, Index n_bins,
                          Execution exec = Execution::parallel);

FeatureMatrix run_ensemble(const ModalReservoir& base, const EnsembleSpec& spec,
                           const TimeSeries& drive, double t_bin, Index taps_per_bin,
                           Index n_bins = -1, Execution exec = Execution::parallel);

/// Ordering of non-bias rows used by ablate: a seeded permutation whose prefixes are
/// the retained sets (so smaller sizes nest inside larger ones).
std::vector<Index> ablation_order(Index n_features, std::uint64_t seed);

/// Keeps a uniformly random subset of `target_nr` feature rows (original order) plus bias.
FeatureMatrix ablate(const FeatureMatrix& features, Index target_nr, std::uint64_t seed);

}  // namespace wavecav
