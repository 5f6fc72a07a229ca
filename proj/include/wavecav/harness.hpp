#pragma once

#include "wavecav/config.hpp"
#include "wavecav/error.hpp"
#include "wavecav/feature_matrix.hpp"
#include "wavecav/readout.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wavecav {

/// Module error re-raised with the pipeline stage that produced it ("[stage] message").
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause);
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

struct RunOptions {
    Execution exec = Execution::parallel;
    std::optional<std::filesystem::path> out_dir;  // overrides config.output_dir
    bool write_artifacts = true;
};

struct RunRecord {
    std::string config_hash;
    EvalReport report;
    double duration_s = 0.0;
    std::map<std::string, std::filesystem::path> artifacts;
};

/// Everything upstream of the readout, shared by run, sweep and ablation.
struct PreparedRun {
    TaskDataset data;
    ModalReservoir base;
    FeatureMatrix features;
    double t_bin = 0.0;
    double waveform_dt = 0.0;
};

PreparedRun prepare_run(const ExperimentConfig& config, Execution exec = Execution::parallel);

struct Evaluation {
    EvalReport report;
    ReadoutWeights weights;
    TimeSeries truth;
    TimeSeries predicted;
};

/// Selects lambda (unless fixed), trains on the train window and scores the test window.
/// NCE additionally reports the symbol error rate of the quantized prediction.
Evaluation evaluate_features(const FeatureMatrix& features, const TaskDataset& data,
                             const ReadoutConfig& readout, Execution exec = Execution::parallel);

/// Full pipeline. Artifacts: results.csv, predictions.csv, reservoir.json, weights.json,
/// record.json (and features.csv when enabled). Files are removed again on failure.
RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct SweepCell {
    double t_value = 0.0;  // T_bin, or T_osc for rossler
    double t_decay = 0.0;
    bool done = false;
    std::string error;
    std::vector<double> nmse;
    double mean_nmse = 0.0;
};

struct SweepResult {
    std::vector<double> t_axis;
    std::vector<double> decay_axis;
    std::vector<SweepCell> cells;  // t-major
    std::optional<Index> argmin;

    const SweepCell& cell(Index it, Index id) const
    {
        return cells[static_cast<std::size_t>(it * static_cast<Index>(decay_axis.size()) + id)];
    }
    /// 100 (nmse - best) / best; NaN for failed cells.
    double deviation_pct(const SweepCell& c) const;

    std::string cells_csv() const;      // one row per cell
    std::string grid_csv(bool deviation) const;  // rows t, columns T_decay
};

SweepResult sweep_heatmap(const ExperimentConfig& config, const std::vector<double>& t_axis,
                          const std::vector<double>& decay_axis,
                          Execution exec = Execution::parallel);

struct AblationRow {
    Index n_r = 0;
    std::vector<double> nmse;  // per seed, mean over target channels
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
};

struct AblationResult {
    Index full_n_r = 0;
    std::vector<AblationRow> rows;
    std::string csv() const;
};

AblationResult size_ablation(const ExperimentConfig& config, const std::vector<Index>& sizes,
                             Index n_seeds, Execution exec = Execution::parallel);

/// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

FeatureMatrix load_external_features(const std::filesystem::path& path);

/// Trains and scores a readout on externally measured features. Target CSV metadata may
/// carry washout_len/train_len/test_len; otherwise 80% train, 20% test. Columns named
/// target.* are used when present, every channel otherwise.
RunRecord train_external(const std::filesystem::path& features_csv,
                         const std::filesystem::path& targets_csv, const ReadoutConfig& readout,
                         const std::filesystem::path& out_dir,
                         Execution exec = Execution::parallel);

}  // namespace wavecav
