#include "wavecav/harness.hpp"

#include "wavecav/cavity.hpp"
#include "wavecav/csv.hpp"
#include "wavecav/ret.hpp"
#include "wavecav/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace wavecav {

namespace fs = std::filesystem;
using nlohmann::json;

StageError::StageError(std::string stage, const Error& cause)
    : Error(cause.code(), "[" + stage + "] " + cause.what()), stage_(std::move(stage))
{
}

namespace {

template <typename F>
auto in_stage(const char* name, F&& f) -> decltype(f())
{
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const Error& e) {
        throw StageError(name, e);
    } catch (const std::exception& e) {
        throw StageError(name, Error(Errc::io_error, e.what()));
    }
}

double mean_of(const std::vector<double>& v)
{
    return v.empty() ? std::numeric_limits<double>::quiet_NaN()
                     : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

const std::vector<double> kNceLevels{-3.0, -1.0, 1.0, 3.0};

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot write " + path.string());
    f << text;
    if (!f) throw Error(Errc::io_error, "write failed for " + path.string());
}

// Tracks files written by one run so they can be withdrawn if a later stage fails.
class ArtifactSet {
public:
    explicit ArtifactSet(fs::path dir) : dir_(std::move(dir)) {}
    ~ArtifactSet()
    {
        if (committed_) return;
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
        if (created_dir_) fs::remove(dir_, ec);  // only succeeds when empty
    }

    void open()
    {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_dir_ = true;
        }
    }
    fs::path add(const std::string& key, const std::string& filename)
    {
        auto p = dir_ / filename;
        written_.push_back(p);
        paths_[key] = p;
        return p;
    }
    const std::map<std::string, fs::path>& paths() const { return paths_; }
    void commit() { committed_ = true; }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
    std::map<std::string, fs::path> paths_;
    bool created_dir_ = false;
    bool committed_ = false;
};

TimeSeries prediction_table(const Evaluation& ev, const std::string& task)
{
    const Index n = ev.truth.channels();
    const bool nce = task == "nce";
    const Index per = nce ? 3 : 2;
    Matrix m(n * per, ev.truth.samples());
    std::vector<std::string> names;
    TimeSeries quant;
    if (nce) quant = quantize_levels(ev.predicted, kNceLevels);
    for (Index c = 0; c < n; ++c) {
        m.row(c * per) = ev.truth.values.row(c);
        m.row(c * per + 1) = ev.predicted.values.row(c);
        names.push_back("truth." + ev.truth.channel_name(c));
        names.push_back("pred." + ev.truth.channel_name(c));
        if (nce) {
            m.row(c * per + 2) = quant.values.row(c);
            names.push_back("symbol." + ev.truth.channel_name(c));
        }
    }
    return TimeSeries(std::move(m), ev.truth.dt, std::move(names));
}

json report_json(const EvalReport& r)
{
    json j;
    j["channels"] = r.channels;
    j["nmse"] = r.nmse;
    j["symbol_error_rate"] = r.symbol_error_rate ? json(*r.symbol_error_rate) : json(nullptr);
    j["lambda"] = r.lambda;
    j["train_cols"] = {r.train_cols.begin, r.train_cols.end};
    j["test_cols"] = {r.test_cols.begin, r.test_cols.end};
    return j;
}

std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_record(const fs::path& path, const RunRecord& rec, const json& config)
{
    json j;
    j["format"] = "wavecav.run";
    j["version"] = 1;
    j["config_hash"] = rec.config_hash;
    j["config"] = config;
    j["report"] = report_json(rec.report);
    j["duration_s"] = rec.duration_s;
    j["finished_at"] = utc_timestamp();
    json a = json::object();
    for (const auto& [k, p] : rec.artifacts) a[k] = p.string();
    a["record"] = path.string();
    j["artifacts"] = a;
    write_text(path, j.dump(2) + "\n");
}

std::string fmt(double v)
{
    return std::isfinite(v) ? csv::format_double(v) : std::string();
}

}  // namespace

PreparedRun prepare_run(const ExperimentConfig& config, Execution exec)
{
    in_stage("config", [&] { config.validate(); });
    PreparedRun out;
    out.t_bin = config.task_bin();
    out.waveform_dt = config.waveform_dt();

    out.data = in_stage("task", [&] {
        TaskSpec spec = config.task;
        spec.seed = config.seeds.task;
        spec.washout_len = config.washout_steps();
        return make_task_dataset(spec);
    });

    auto drive = in_stage("encode", [&] {
        TimeSeries in = out.data.input;
        in.names = {"drive"};
        return encode_waveform(in, out.t_bin, out.waveform_dt);
    });

    out.base = in_stage("cavity", [&] {
        auto r = build_cavity(config.cavity, config.seeds.cavity);
        calibrate_diode(r, drive, config.diode);
        return r;
    });

    out.features = in_stage("ensemble", [&] {
        EnsembleSpec spec = config.ensemble;
        spec.seed = config.seeds.ensemble;
        if (spec.betas.empty()) spec.betas = spec.resolved_betas(config.cavity.f0);
        return run_ensemble(out.base, spec, drive, out.t_bin, config.timing.taps_per_bin,
                            out.data.input.samples(), exec);
    });
    return out;
}

Evaluation evaluate_features(const FeatureMatrix& features, const TaskDataset& data,
                             const ReadoutConfig& readout, Execution exec)
{
    Evaluation ev;
    in_stage("readout", [&] {
        require(features.cols() == data.target.samples(),
                "feature columns (" + std::to_string(features.cols()) + ") != target samples (" +
                    std::to_string(data.target.samples()) + ")",
                Errc::dimension_mismatch);
        const double lambda = readout.lambda ? *readout.lambda
                                             : select_lambda(features, data.target, data.train_cols(),
                                                             readout.lambda_grid,
                                                             readout.validation_fraction, exec);
        ev.weights = train_ridge(features, data.target, lambda, data.train_cols(), exec);
        ev.weights.task = data.task;
    });
    in_stage("evaluate", [&] {
        ev.predicted = predict(ev.weights, features, data.test_cols());
        ev.truth = data.target.slice(data.test_cols());
        ev.predicted.names = ev.truth.names;
        auto& r = ev.report;
        for (Index c = 0; c < ev.truth.channels(); ++c) r.channels.push_back(ev.truth.channel_name(c));
        r.nmse = nmse(ev.predicted, ev.truth, readout.normalization);
        if (data.task == "nce")
            r.symbol_error_rate = symbol_error_rate(quantize_levels(ev.predicted, kNceLevels), ev.truth);
        r.train_cols = data.train_cols();
        r.test_cols = data.test_cols();
        r.lambda = ev.weights.lambda;
    });
    return ev;
}

RunRecord run_experiment(const ExperimentConfig& config, const RunOptions& options)
{
    const auto t0 = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.config_hash = config_hash(config);
    const fs::path dir = options.out_dir ? *options.out_dir : config.output_dir;
    ArtifactSet artifacts(dir);

    auto prep = prepare_run(config, options.exec);
    auto ev = evaluate_features(prep.features, prep.data, config.readout, options.exec);
    rec.report = ev.report;

    if (options.write_artifacts) {
        in_stage("write", [&] {
            artifacts.open();
            write_text(artifacts.add("results", "results.csv"),
                       EvalReport::csv_header(rec.report.channels, rec.report.symbol_error_rate.has_value()) +
                           "\n" + rec.report.csv_row() + "\n");
            write_csv(artifacts.add("predictions", "predictions.csv"),
                      prediction_table(ev, prep.data.task),
                      {{"task", prep.data.task},
                       {"first_step", std::to_string(prep.data.test_cols().begin)}});
            save_reservoir(artifacts.add("reservoir", "reservoir.json"), prep.base);
            save_weights(artifacts.add("weights", "weights.json"), ev.weights);
            if (config.write_features)
                write_feature_csv(artifacts.add("features", "features.csv"), prep.features);
        });
    }
    rec.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options.write_artifacts) {
        in_stage("write", [&] {
            const auto record_path = artifacts.add("record", "record.json");
            rec.artifacts = artifacts.paths();
            write_record(record_path, rec, json::parse(canonical_json(config)));
        });
        artifacts.commit();
    }
    return rec;
}

double SweepResult::deviation_pct(const SweepCell& c) const
{
    if (!c.done || !argmin) return std::numeric_limits<double>::quiet_NaN();
    const double best = cells[static_cast<std::size_t>(*argmin)].mean_nmse;
    return 100.0 * (c.mean_nmse - best) / best;
}

std::string SweepResult::cells_csv() const
{
    std::ostringstream out;
    std::size_t n_ch = 0;
    for (const auto& c : cells) n_ch = std::max(n_ch, c.nmse.size());
    out << "t_ps,t_decay_ps,status,mean_nmse,deviation_pct";
    for (std::size_t k = 0; k < n_ch; ++k) out << ",nmse_" << k;
    out << ",error\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& c = cells[i];
        out << csv::format_double(c.t_value * 1e12) << ',' << csv::format_double(c.t_decay * 1e12) << ','
            << (c.done ? "done" : "failed") << ',' << (c.done ? fmt(c.mean_nmse) : "") << ','
            << fmt(deviation_pct(c));
        for (std::size_t k = 0; k < n_ch; ++k) out << ',' << (k < c.nmse.size() ? fmt(c.nmse[k]) : "");
        std::string err = c.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << ',' << err << '\n';
    }
    return out.str();
}

std::string SweepResult::grid_csv(bool deviation) const
{
    std::ostringstream out;
    out << "t_ps";
    for (double d : decay_axis) out << ",decay_" << csv::format_double(d * 1e12);
    out << '\n';
    for (std::size_t it = 0; it < t_axis.size(); ++it) {
        out << csv::format_double(t_axis[it] * 1e12);
        for (std::size_t id = 0; id < decay_axis.size(); ++id) {
            const auto& c = cell(static_cast<Index>(it), static_cast<Index>(id));
            out << ',' << (c.done ? fmt(deviation ? deviation_pct(c) : c.mean_nmse) : "");
        }
        out << '\n';
    }
    return out.str();
}

SweepResult sweep_heatmap(const ExperimentConfig& config, const std::vector<double>& t_axis,
                          const std::vector<double>& decay_axis, Execution exec)
{
    require(!t_axis.empty() && !decay_axis.empty(), "sweep: both axes must be nonempty",
            Errc::config_invalid);
    SweepResult res;
    res.t_axis = t_axis;
    res.decay_axis = decay_axis;
    const auto n_t = static_cast<Index>(t_axis.size());
    const auto n_d = static_cast<Index>(decay_axis.size());
    res.cells.resize(static_cast<std::size_t>(n_t * n_d));

    // Cells are independent; members inside a cell run serially when cells run in parallel.
    const Execution inner = exec == Execution::parallel ? Execution::serial : exec;
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
    for (Index i = 0; i < n_t * n_d; ++i) {
        auto& cell = res.cells[static_cast<std::size_t>(i)];
        cell.t_value = t_axis[static_cast<std::size_t>(i / n_d)];
        cell.t_decay = decay_axis[static_cast<std::size_t>(i % n_d)];
        ExperimentConfig c = config;
        if (c.task.name == "rossler") c.timing.t_osc = cell.t_value;
        else c.timing.t_bin = cell.t_value;
        c.cavity.t_decay = cell.t_decay;
        try {
            auto prep = prepare_run(c, inner);
            auto ev = evaluate_features(prep.features, prep.data, c.readout, inner);
            cell.nmse = ev.report.nmse;
            cell.mean_nmse = mean_of(cell.nmse);
            cell.done = std::isfinite(cell.mean_nmse);
            if (!cell.done) cell.error = "non-finite nmse";
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    }
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        const auto& c = res.cells[i];
        if (c.done && (!res.argmin || c.mean_nmse < res.cells[static_cast<std::size_t>(*res.argmin)].mean_nmse))
            res.argmin = static_cast<Index>(i);
    }
    return res;
}

double quantile(std::vector<double> v, double q)
{
    require(!v.empty(), "quantile of an empty set");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + frac * (v[hi] - v[lo]);
}

std::string AblationResult::csv() const
{
    std::ostringstream out;
    std::size_t n_seeds = rows.empty() ? 0 : rows.front().nmse.size();
    out << "n_r,median_nmse,q25_nmse,q75_nmse";
    for (std::size_t s = 0; s < n_seeds; ++s) out << ",seed_" << s;
    out << '\n';
    for (const auto& r : rows) {
        out << r.n_r << ',' << fmt(r.median) << ',' << fmt(r.q25) << ',' << fmt(r.q75);
        for (double v : r.nmse) out << ',' << fmt(v);
        out << '\n';
    }
    return out.str();
}

AblationResult size_ablation(const ExperimentConfig& config, const std::vector<Index>& sizes,
                             Index n_seeds, Execution exec)
{
    require(!sizes.empty(), "ablation: size list is empty", Errc::config_invalid);
    require(n_seeds >= 1, "ablation: n_seeds must be >= 1", Errc::config_invalid);
    auto prep = prepare_run(config, exec);
    AblationResult res;
    res.full_n_r = prep.features.n_features();
    for (auto s : sizes)
        require(s >= 1 && s <= res.full_n_r,
                "ablation: size " + std::to_string(s) + " outside [1, " + std::to_string(res.full_n_r) + "]",
                Errc::config_invalid);

    const auto n_jobs = static_cast<Index>(sizes.size()) * n_seeds;
    std::vector<double> scores(static_cast<std::size_t>(n_jobs));
    std::vector<std::string> errors(static_cast<std::size_t>(n_jobs));
    const Execution inner = exec == Execution::parallel ? Execution::serial : exec;
#pragma omp parallel for schedule(dynamic, 1) if (exec == Execution::parallel)
    for (Index j = 0; j < n_jobs; ++j) {
        const auto size = sizes[static_cast<std::size_t>(j / n_seeds)];
        const auto seed = derive_seed(config.seeds.ablation, static_cast<std::uint64_t>(j % n_seeds));
        try {
            auto fm = ablate(prep.features, size, seed);
            auto ev = evaluate_features(fm, prep.data, config.readout, inner);
            scores[static_cast<std::size_t>(j)] = mean_of(ev.report.nmse);
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(j)] = e.what();
        }
    }
    for (Index j = 0; j < n_jobs; ++j)
        if (!errors[static_cast<std::size_t>(j)].empty())
            throw StageError("ablation", Error(Errc::rank_deficient, errors[static_cast<std::size_t>(j)]));

    for (std::size_t k = 0; k < sizes.size(); ++k) {
        AblationRow row;
        row.n_r = sizes[k];
        row.nmse.assign(scores.begin() + static_cast<std::ptrdiff_t>(k) * n_seeds,
                        scores.begin() + static_cast<std::ptrdiff_t>(k + 1) * n_seeds);
        row.median = quantile(row.nmse, 0.5);
        row.q25 = quantile(row.nmse, 0.25);
        row.q75 = quantile(row.nmse, 0.75);
        res.rows.push_back(std::move(row));
    }
    return res;
}

FeatureMatrix load_external_features(const fs::path& path)
{
    auto fm = read_feature_csv(path);
    fm.validate();
    return fm;
}

RunRecord train_external(const fs::path& features_csv, const fs::path& targets_csv,
                         const ReadoutConfig& readout, const fs::path& out_dir, Execution exec)
{
    const auto t0 = std::chrono::steady_clock::now();
    auto fm = in_stage("load", [&] { return load_external_features(features_csv); });
    TaskDataset data;
    in_stage("load", [&] {
        CsvMetadata meta;
        auto raw = read_csv(targets_csv, &meta);
        std::vector<Index> picked;
        for (Index c = 0; c < raw.channels(); ++c)
            if (raw.channel_name(c).rfind("target.", 0) == 0) picked.push_back(c);
        if (picked.empty())
            for (Index c = 0; c < raw.channels(); ++c) picked.push_back(c);
        Matrix m(static_cast<Index>(picked.size()), raw.samples());
        std::vector<std::string> names;
        for (std::size_t i = 0; i < picked.size(); ++i) {
            m.row(static_cast<Index>(i)) = raw.values.row(picked[i]);
            auto n = raw.channel_name(picked[i]);
            names.push_back(n.rfind("target.", 0) == 0 ? n.substr(7) : n);
        }
        data.target = TimeSeries(std::move(m), raw.dt, std::move(names));
        data.input = data.target;  // unused; keeps the dataset well formed
        data.task = meta.count("task") ? meta.at("task") : "external";
        const Index total = raw.samples();
        auto meta_index = [&](const char* key, Index fallback) {
            if (!meta.count(key)) return fallback;
            return static_cast<Index>(csv::parse_double(meta.at(key), 2));
        };
        data.washout_len = meta_index("washout_len", 0);
        const Index usable = total - data.washout_len;
        data.train_len = meta_index("train_len", usable * 4 / 5);
        data.test_len = meta_index("test_len", usable - data.train_len);
        require(data.washout_len + data.train_len + data.test_len <= total && data.train_len > 0 &&
                    data.test_len > 0,
                "targets: washout/train/test windows do not fit " + std::to_string(total) + " samples",
                Errc::config_invalid);
    });
    auto ev = evaluate_features(fm, data, readout, exec);
    RunRecord rec;
    rec.report = ev.report;
    ArtifactSet artifacts(out_dir);
    in_stage("write", [&] {
        artifacts.open();
        write_text(artifacts.add("results", "results.csv"),
                   EvalReport::csv_header(rec.report.channels, rec.report.symbol_error_rate.has_value()) +
                       "\n" + rec.report.csv_row() + "\n");
        write_csv(artifacts.add("predictions", "predictions.csv"),
                  prediction_table(ev, data.task), {{"task", data.task}});
        save_weights(artifacts.add("weights", "weights.json"), ev.weights);
        rec.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto record_path = artifacts.add("record", "record.json");
        rec.artifacts = artifacts.paths();
        json src = {{"features", features_csv.string()}, {"targets", targets_csv.string()}};
        write_record(record_path, rec, src);
    });
    artifacts.commit();
    return rec;
}

}  // namespace wavecav
