#include "wavecav/readout.hpp"

#include "wavecav/csv.hpp"
#include "wavecav/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace wavecav {

namespace {

std::string shape(Index r, Index c)
{
    return std::to_string(r) + "x" + std::to_string(c);
}

void check_training_inputs(const FeatureMatrix& f, const TimeSeries& targets, ColumnRange cols)
{
    f.validate();
    targets.validate();
    require(targets.samples() == f.cols(),
            "train_ridge: targets have " + std::to_string(targets.samples()) +
                " samples but features have " + std::to_string(f.cols()) + " columns",
            Errc::dimension_mismatch);
    require(cols.begin >= 0 && cols.end <= f.cols() && !cols.empty(),
            "train_ridge: training columns [" + std::to_string(cols.begin) + ", " +
                std::to_string(cols.end) + ") empty or outside " + std::to_string(f.cols()));
}

// W = C (G + lambda I)^-1 for symmetric G.
Matrix solve_normal_equations(const Matrix& gram, const Matrix& cross, double lambda)
{
    const Index n = gram.rows();
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    bool singular = llt.info() != Eigen::Success;
    if (!singular) {
        const Eigen::MatrixXd l = llt.matrixL();
        for (Index i = 0; i < n && !singular; ++i) {
            // Squared pivot relative to the diagonal: the share of row i not explained by
            // the rows before it.
            const double ratio = l(i, i) * l(i, i) / std::max(a(i, i), 1e-300);
            singular = !(ratio > 1e-14);
        }
    }
    if (singular)
        throw Error(Errc::rank_deficient,
                    "train_ridge: normal matrix is singular at lambda = " + csv::format_double(lambda) +
                        "; features are linearly dependent, use lambda > 0");
    Eigen::MatrixXd wt = llt.solve(Eigen::MatrixXd(cross.transpose()));
    return wt.transpose();
}

}  // namespace

ReadoutWeights train_ridge(const FeatureMatrix& features, const TimeSeries& targets, double lambda,
                           ColumnRange train_cols, Execution exec)
{
    require(lambda >= 0.0 && std::isfinite(lambda), "train_ridge: lambda must be >= 0");
    check_training_inputs(features, targets, train_cols);
    const bool par = exec == Execution::parallel;
    Matrix gram = par ? kernels::gram_parallel(features.values, train_cols)
                      : kernels::gram_serial(features.values, train_cols);
    Matrix cross = par ? kernels::cross_parallel(targets.values, features.values, train_cols)
                       : kernels::cross_serial(targets.values, features.values, train_cols);
    ReadoutWeights w;
    w.weights = solve_normal_equations(gram, cross, lambda);
    w.lambda = lambda;
    w.row_map = features.labels;
    for (Index c = 0; c < targets.channels(); ++c) w.target_names.push_back(targets.channel_name(c));
    return w;
}

TimeSeries predict(const ReadoutWeights& weights, const FeatureMatrix& features, ColumnRange cols)
{
    if (weights.weights.cols() != features.rows())
        throw Error(Errc::dimension_mismatch, "predict: weights are " +
                                                  shape(weights.weights.rows(), weights.weights.cols()) +
                                                  " but features are " +
                                                  shape(features.rows(), features.cols()));
    require(cols.begin >= 0 && cols.end <= features.cols() && cols.begin <= cols.end,
            "predict: column range outside feature matrix", Errc::dimension_mismatch);
    Matrix out = weights.weights * features.values.middleCols(cols.begin, cols.size());
    return TimeSeries(std::move(out), 1.0, weights.target_names);
}

std::vector<double> nmse(const TimeSeries& predicted, const TimeSeries& truth, NmseNormalization norm)
{
    require(predicted.channels() == truth.channels() && predicted.samples() == truth.samples(),
            "nmse: shapes differ (" + shape(predicted.channels(), predicted.samples()) + " vs " +
                shape(truth.channels(), truth.samples()) + ")",
            Errc::dimension_mismatch);
    std::vector<double> out;
    for (Index c = 0; c < truth.channels(); ++c) {
        double err = 0.0, power = 0.0;
        for (Index t = 0; t < truth.samples(); ++t) {
            const double d = predicted.values(c, t) - truth.values(c, t);
            const double ref = norm == NmseNormalization::truth_power ? truth.values(c, t)
                                                                       : predicted.values(c, t);
            err += d * d;
            power += ref * ref;
        }
        if (!(power > 0.0))
            throw Error(Errc::undefined_normalization,
                        "nmse: channel " + truth.channel_name(c) + " has zero normalizing power");
        out.push_back(err / power);
    }
    return out;
}

TimeSeries quantize_levels(const TimeSeries& series, const std::vector<double>& levels)
{
    require(!levels.empty(), "quantize_levels: no levels");
    require(std::is_sorted(levels.begin(), levels.end()), "quantize_levels: levels must be sorted");
    TimeSeries out = series;
    out.values = series.values.unaryExpr([&](double v) {
        // First level >= v; a tie against the level below resolves upward.
        auto it = std::lower_bound(levels.begin(), levels.end(), v);
        if (it == levels.end()) return levels.back();
        if (it == levels.begin()) return levels.front();
        const double hi = *it, lo = *(it - 1);
        return (v - lo) >= (hi - v) ? hi : lo;
    });
    return out;
}

double symbol_error_rate(const TimeSeries& quantized, const TimeSeries& truth)
{
    require(quantized.channels() == truth.channels() && quantized.samples() == truth.samples(),
            "symbol_error_rate: shapes differ", Errc::dimension_mismatch);
    const auto total = quantized.values.size();
    require(total > 0, "symbol_error_rate: empty series");
    const auto wrong = (quantized.values.array() != truth.values.array()).count();
    return static_cast<double>(wrong) / static_cast<double>(total);
}

std::vector<double> default_lambda_grid()
{
    return {1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

double select_lambda(const FeatureMatrix& features, const TimeSeries& targets, ColumnRange train_cols,
                     const std::vector<double>& grid, double validation_fraction, Execution exec)
{
    require(!grid.empty(), "select_lambda: empty lambda grid");
    require(validation_fraction > 0.0 && validation_fraction < 1.0,
            "select_lambda: validation fraction must lie in (0, 1)");
    check_training_inputs(features, targets, train_cols);
    const auto n_val = std::max<Index>(1, static_cast<Index>(std::llround(validation_fraction * static_cast<double>(train_cols.size()))));
    const ColumnRange fit{train_cols.begin, train_cols.end - n_val};
    const ColumnRange val{train_cols.end - n_val, train_cols.end};
    require(!fit.empty(), "select_lambda: training window too short to hold out a validation slice");

    const bool par = exec == Execution::parallel;
    Matrix gram = par ? kernels::gram_parallel(features.values, fit) : kernels::gram_serial(features.values, fit);
    Matrix cross = par ? kernels::cross_parallel(targets.values, features.values, fit)
                       : kernels::cross_serial(targets.values, features.values, fit);
    const TimeSeries truth = targets.slice(val);

    double best_lambda = grid.front();
    double best_score = std::numeric_limits<double>::infinity();
    for (double lambda : grid) {
        Matrix w;
        try {
            w = solve_normal_equations(gram, cross, lambda);
        } catch (const Error& e) {
            if (e.code() == Errc::rank_deficient) continue;
            throw;
        }
        TimeSeries pred(w * features.values.middleCols(val.begin, val.size()), 1.0);
        double score = 0.0;
        try {
            auto per = nmse(pred, truth);
            score = std::accumulate(per.begin(), per.end(), 0.0) / static_cast<double>(per.size());
        } catch (const Error& e) {
            if (e.code() != Errc::undefined_normalization) throw;
            score = (pred.values - truth.values).squaredNorm();
        }
        if (score <= best_score) {
            best_score = score;
            best_lambda = lambda;
        }
    }
    if (!std::isfinite(best_score))
        throw Error(Errc::rank_deficient, "select_lambda: every grid value gave a singular system");
    return best_lambda;
}

std::string EvalReport::csv_header(const std::vector<std::string>& channels, bool with_ser)
{
    std::string h = "lambda,train_begin,train_end,test_begin,test_end";
    for (const auto& c : channels) h += ",nmse_" + c;
    if (with_ser) h += ",ser";
    return h;
}

std::string EvalReport::csv_row() const
{
    std::string r = csv::format_double(lambda) + "," + std::to_string(train_cols.begin) + "," +
                    std::to_string(train_cols.end) + "," + std::to_string(test_cols.begin) + "," +
                    std::to_string(test_cols.end);
    for (double v : nmse) r += "," + csv::format_double(v);
    if (symbol_error_rate) r += "," + csv::format_double(*symbol_error_rate);
    return r;
}

std::string weights_to_json(const ReadoutWeights& w)
{
    nlohmann::json j;
    j["format"] = "wavecav.readout";
    j["version"] = 1;
    j["task"] = w.task;
    j["lambda"] = w.lambda;
    j["targets"] = w.target_names;
    auto rows = nlohmann::json::array();
    for (const auto& l : w.row_map) rows.push_back(l.to_string());
    j["row_map"] = rows;
    auto m = nlohmann::json::array();
    for (Index i = 0; i < w.weights.rows(); ++i)
        m.push_back(std::vector<double>(w.weights.row(i).begin(), w.weights.row(i).end()));
    j["weights"] = m;
    return j.dump(1);
}

ReadoutWeights weights_from_json(const std::string& text)
{
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "wavecav.readout" || j.at("version").get<int>() != 1)
            throw Error(Errc::parse_error, "weights file: unsupported format or version");
        ReadoutWeights w;
        w.task = j.at("task").get<std::string>();
        w.lambda = j.at("lambda").get<double>();
        w.target_names = j.at("targets").get<std::vector<std::string>>();
        for (const auto& l : j.at("row_map")) w.row_map.push_back(FeatureLabel::parse(l.get<std::string>(), 0));
        const auto& m = j.at("weights");
        const auto cols = static_cast<Index>(w.row_map.size() + 1);
        w.weights.resize(static_cast<Index>(m.size()), cols);
        for (std::size_t i = 0; i < m.size(); ++i) {
            auto row = m[i].get<std::vector<double>>();
            require(static_cast<Index>(row.size()) == cols, "weights file: row length mismatch",
                    Errc::parse_error);
            for (Index c = 0; c < cols; ++c) w.weights(static_cast<Index>(i), c) = row[static_cast<std::size_t>(c)];
        }
        require(w.weights.allFinite(), "weights file: non-finite weight", Errc::parse_error);
        return w;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("weights file: ") + e.what());
    }
}

void save_weights(const std::filesystem::path& path, const ReadoutWeights& w)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    f << weights_to_json(w) << '\n';
}

ReadoutWeights load_weights(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return weights_from_json(ss.str());
}

}  // namespace wavecav
