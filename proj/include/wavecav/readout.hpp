#pragma once

#include "wavecav/feature_matrix.hpp"
#include "wavecav/time_series.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace wavecav {

/// Linear readout s = W r with W of shape targets x (N_r + 1).
struct ReadoutWeights {
    Matrix weights;
    double lambda = 0.0;
    std::vector<FeatureLabel> row_map;
    std::string task;
    std::vector<std::string> target_names;
};

/// W = S' R^T (R R^T + lambda I)^-1 over `train_cols`, by Cholesky of the regularized
/// Gram matrix. Throws rank_deficient when that matrix is numerically singular.
ReadoutWeights train_ridge(const FeatureMatrix& features, const TimeSeries& targets, double lambda,
                           ColumnRange train_cols, Execution exec = Execution::parallel);

/// W R over `cols`; dimension_mismatch names both shapes.
TimeSeries predict(const ReadoutWeights& weights, const FeatureMatrix& features, ColumnRange cols);

enum class NmseNormalization { truth_power, output_power };

/// Per channel sum (pred - truth)^2 / sum truth^2 (or / sum pred^2 for output_power).
std::vector<double> nmse(const TimeSeries& predicted, const TimeSeries& truth,
                         NmseNormalization norm = NmseNormalization::truth_power);

/// Nearest level; exact midpoints go to the higher level.
TimeSeries quantize_levels(const TimeSeries& series, const std::vector<double>& levels);

/// Fraction of samples (all channels) where quantized != truth.
double symbol_error_rate(const TimeSeries& quantized, const TimeSeries& truth);

/// Default lambda grid 1e-8 ... 1e-1.
std::vector<double> default_lambda_grid();

/// Picks the grid value with the lowest mean validation NMSE when training on the
/// first (1 - validation_fraction) of `train_cols` and validating on the rest.
/// Ties go to the larger lambda.
double select_lambda(const FeatureMatrix& features, const TimeSeries& targets, ColumnRange train_cols,
                     const std::vector<double>& grid, double validation_fraction = 0.1,
                     Execution exec = Execution::parallel);

struct EvalReport {
    std::vector<std::string> channels;
    std::vector<double> nmse;
    std::optional<double> symbol_error_rate;
    ColumnRange train_cols;
    ColumnRange test_cols;
    double lambda = 0.0;

    static std::string csv_header(const std::vector<std::string>& channels, bool with_ser);
    std::string csv_row() const;
};

/// Versioned JSON serialization.
std::string weights_to_json(const ReadoutWeights& w);
ReadoutWeights weights_from_json(const std::string& text);
void save_weights(const std::filesystem::path& path, const ReadoutWeights& w);
ReadoutWeights load_weights(const std::filesystem::path& path);

namespace kernels {

/// Upper triangle mirrored: G = R[:, cols] R[:, cols]^T, each entry a left-to-right sum.
Matrix gram_serial(const Matrix& r, ColumnRange cols);
Matrix gram_parallel(const Matrix& r, ColumnRange cols);

/// C = S[:, cols] R[:, cols]^T.
Matrix cross_serial(const Matrix& s, const Matrix& r, ColumnRange cols);
Matrix cross_parallel(const Matrix& s, const Matrix& r, ColumnRange cols);

}  // namespace kernels

}  // namespace wavecav
