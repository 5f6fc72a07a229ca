#include "wavecav/tasks.hpp"

#include "wavecav/csv.hpp"
#include "wavecav/error.hpp"
#include "wavecav/rng.hpp"
#include "wavecav/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace wavecav {

std::array<double, 3> rossler_derivative(const std::array<double, 3>& s, const RosslerParams& p)
{
    const auto [x, y, z] = s;
    return {-y - z, x + p.a * y, p.b + z * (x - p.c)};
}

std::array<double, 3> rossler_rk4_step(const std::array<double, 3>& s, const RosslerParams& p)
{
    const double h = p.dt;
    auto axpy = [](const std::array<double, 3>& base, double f, const std::array<double, 3>& d) {
        return std::array<double, 3>{base[0] + f * d[0], base[1] + f * d[1], base[2] + f * d[2]};
    };
    auto k1 = rossler_derivative(s, p);
    auto k2 = rossler_derivative(axpy(s, 0.5 * h, k1), p);
    auto k3 = rossler_derivative(axpy(s, 0.5 * h, k2), p);
    auto k4 = rossler_derivative(axpy(s, h, k3), p);
    std::array<double, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

TimeSeries rossler_trajectory(const RosslerParams& params, std::size_t n_steps)
{
    require(n_steps >= 1, "rossler_trajectory: n_steps must be >= 1");
    require(params.dt > 0.0, "rossler_trajectory: dt must be positive");
    Matrix v(3, static_cast<Index>(n_steps));
    auto s = params.initial;
    for (std::size_t i = 0; i < n_steps; ++i) {
        if (!std::isfinite(s[0]) || !std::isfinite(s[1]) || !std::isfinite(s[2]))
            throw Error(Errc::integration_divergence,
                        "rossler_trajectory: non-finite state at step " + std::to_string(i));
        for (int c = 0; c < 3; ++c) v(c, static_cast<Index>(i)) = s[c];
        s = rossler_rk4_step(s, params);
    }
    return TimeSeries(std::move(v), params.dt, {"x", "y", "z"});
}

double estimate_t_osc(const TimeSeries& series, Index channel)
{
    require(series.samples() >= 64, "estimate_t_osc: need at least 64 samples");
    require(channel >= 0 && channel < series.channels(), "estimate_t_osc: channel out of range");
    auto spec = magnitude_spectrum(series.channel(channel), series.dt, Window::hann, 8);
    const auto& mag = spec.magnitude;

    std::vector<double> sorted(mag.begin() + 1, mag.end());
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2),
                     sorted.end());
    const double median = sorted[sorted.size() / 2];
    const double global = *std::max_element(mag.begin() + 1, mag.end());
    if (!(global > 0.0))
        throw Error(Errc::no_dominant_period, "estimate_t_osc: flat (zero) spectrum");

    for (std::size_t k = 1; k + 1 < mag.size(); ++k) {
        if (mag[k] < mag[k - 1] || mag[k] < mag[k + 1]) continue;
        if (mag[k] >= 3.0 * median && mag[k] >= 0.25 * global) {
            double f = (static_cast<double>(k) + parabolic_peak_offset(mag, k)) * spec.df;
            return 1.0 / f;
        }
    }
    throw Error(Errc::no_dominant_period, "estimate_t_osc: no spectral peak >= 3x median magnitude");
}

TimeSeries henon_orbit(std::size_t n_steps, double x0, double y0)
{
    require(n_steps >= 1, "henon_orbit: n_steps must be >= 1");
    Matrix v(2, static_cast<Index>(n_steps));
    double x = x0, y = y0;
    for (std::size_t i = 0; i < n_steps; ++i) {
        if (!(std::abs(x) <= 10.0))
            throw Error(Errc::orbit_escape,
                        "henon_orbit: orbit escaped (|x| > 10) at step " + std::to_string(i));
        v(0, static_cast<Index>(i)) = x;
        v(1, static_cast<Index>(i)) = y;
        const double xn = 1.0 - 1.4 * x * x + y;
        y = 0.3 * x;
        x = xn;
    }
    return TimeSeries(std::move(v), 1.0, {"x", "y"});
}

TimeSeries narma10_target(const TimeSeries& u)
{
    require(u.channels() == 1, "narma10_target: input must have one channel");
    require(u.samples() >= 10, "narma10_target: input needs at least 10 samples");
    auto in = u.channel(0);
    for (double x : in)
        require(x >= 0.0 && x <= 0.5, "narma10_target: input values must lie in [0, 0.5]");

    const auto n = in.size();
    // y[m] holds y(m); y(0) and earlier history are zero.
    std::vector<double> y(n + 1, 0.0);
    Matrix out(1, static_cast<Index>(n));
    for (std::size_t t = 0; t < n; ++t) {
        double window = 0.0;
        for (std::size_t i = 0; i < 10 && i <= t; ++i) window += y[t - i];
        const double lagged = t >= 9 ? in[t - 9] : 0.0;
        const double next = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * lagged * in[t] + 0.1;
        if (!(std::abs(next) <= 10.0))
            throw Error(Errc::narma_divergence,
                        "narma10_target: recurrence diverged at step " + std::to_string(t));
        y[t + 1] = next;
        out(0, static_cast<Index>(t)) = next;
    }
    return TimeSeries(std::move(out), u.dt, {"y"});
}

std::vector<double> nce_channel(std::span<const double> d)
{
    const auto n = static_cast<std::ptrdiff_t>(d.size());
    std::vector<double> q(d.size(), 0.0);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
        double acc = 0.0;
        for (std::size_t k = 0; k < kNceTaps.size(); ++k) {
            const std::ptrdiff_t idx = t + kNceLead - static_cast<std::ptrdiff_t>(k);
            if (idx >= 0 && idx < n) acc += kNceTaps[k] * d[static_cast<std::size_t>(idx)];
        }
        q[static_cast<std::size_t>(t)] = acc;
    }
    return q;
}

NceSequences nce_sequences(std::size_t n_steps, std::uint64_t seed,
                           std::optional<double> noise_snr_db)
{
    require(n_steps >= 10, "nce_sequences: n_steps must be >= 10");
    auto rng = make_rng(seed, 0x4e4345);
    std::uniform_int_distribution<int> pick(0, 3);
    constexpr std::array<double, 4> levels{-3.0, -1.0, 1.0, 3.0};
    std::vector<double> d(n_steps);
    for (auto& s : d) s = levels[static_cast<std::size_t>(pick(rng))];
    auto q = nce_channel(d);

    if (noise_snr_db) {
        double power = 0.0;
        for (double v : q) power += v * v;
        power /= static_cast<double>(q.size());
        const double sigma = std::sqrt(power / std::pow(10.0, *noise_snr_db / 10.0));
        std::normal_distribution<double> noise(0.0, sigma);
        for (auto& v : q) v += noise(rng);
    }
    return {TimeSeries::scalar(d, 1.0, "d"), TimeSeries::scalar(q, 1.0, "q")};
}

FunctionPair function_simulator_pair(double f0, std::size_t n_periods,
                                     std::size_t samples_per_period,
                                     const std::function<double(double)>& shape)
{
    require(f0 > 0.0, "function_simulator_pair: f0 must be positive");
    require(samples_per_period >= 8, "function_simulator_pair: samples_per_period must be >= 8");
    require(n_periods >= 1, "function_simulator_pair: n_periods must be >= 1");
    const auto n = static_cast<Index>(n_periods * samples_per_period);
    const double dt = 1.0 / (f0 * static_cast<double>(samples_per_period));
    Matrix u(1, n), target(1, n);
    for (Index i = 0; i < n; ++i) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(i % static_cast<Index>(samples_per_period)) /
                             static_cast<double>(samples_per_period);
        const double s = std::sin(phase);
        u(0, i) = s;
        target(0, i) = shape ? shape(phase) : s * s * s;
    }
    return {TimeSeries(std::move(u), dt, {"u"}), TimeSeries(std::move(target), dt, {"target"})};
}

Index last_sample_before(double position)
{
    return static_cast<Index>(std::ceil(position - 0.5)) - 1;
}

TimeSeries encode_waveform(const TimeSeries& series, double t_bin, double waveform_dt)
{
    require(t_bin > 0.0, "encode_waveform: t_bin must be positive");
    require(waveform_dt > 0.0 && waveform_dt <= t_bin / 8.0 * (1.0 + 1e-12),
            "encode_waveform: waveform_dt must be <= t_bin / 8");
    const double ratio = t_bin / waveform_dt;
    const auto n_out = static_cast<Index>(std::llround(static_cast<double>(series.samples()) * ratio));
    Matrix v(series.channels(), n_out);
    for (Index i = 0; i < n_out; ++i) {
        auto src = static_cast<Index>(std::floor((static_cast<double>(i) + 0.5) / ratio));
        src = std::min(src, series.samples() - 1);
        for (Index c = 0; c < series.channels(); ++c) v(c, i) = series.values(c, src);
    }
    return TimeSeries(std::move(v), waveform_dt, series.names);
}

void TaskDataset::validate() const
{
    input.validate();
    target.validate();
    require(input.samples() == target.samples(), "TaskDataset: input and target lengths differ",
            Errc::config_invalid);
    require(washout_len >= 0 && train_len > 0 && test_len > 0,
            "TaskDataset: train and test windows must be non-empty", Errc::config_invalid);
    require(washout_len + train_len + test_len <= input.samples(),
            "TaskDataset: washout + train + test exceeds available samples", Errc::config_invalid);
}

void write_dataset_csv(const std::filesystem::path& path, const TaskDataset& ds)
{
    Matrix v(ds.input.channels() + ds.target.channels(), ds.input.samples());
    v.topRows(ds.input.channels()) = ds.input.values;
    v.bottomRows(ds.target.channels()) = ds.target.values;
    std::vector<std::string> names;
    for (Index c = 0; c < ds.input.channels(); ++c) names.push_back("input." + ds.input.channel_name(c));
    for (Index c = 0; c < ds.target.channels(); ++c)
        names.push_back("target." + ds.target.channel_name(c));
    write_csv(path, TimeSeries(std::move(v), ds.input.dt, std::move(names)),
              {{"task", ds.task},
               {"washout_len", std::to_string(ds.washout_len)},
               {"train_len", std::to_string(ds.train_len)},
               {"test_len", std::to_string(ds.test_len)}});
}

TaskDataset read_dataset_csv(const std::filesystem::path& path)
{
    CsvMetadata meta;
    auto all = read_csv(path, &meta);
    std::vector<Index> in_rows, tgt_rows;
    std::vector<std::string> in_names, tgt_names;
    for (Index c = 0; c < all.channels(); ++c) {
        auto name = all.channel_name(c);
        if (name.rfind("input.", 0) == 0) {
            in_rows.push_back(c);
            in_names.push_back(name.substr(6));
        } else if (name.rfind("target.", 0) == 0) {
            tgt_rows.push_back(c);
            tgt_names.push_back(name.substr(7));
        } else {
            throw Error(Errc::parse_error, "line 1: column '" + name + "' lacks input./target. prefix");
        }
    }
    require(!in_rows.empty() && !tgt_rows.empty(), "dataset CSV needs input and target columns",
            Errc::parse_error);
    auto pick = [&](const std::vector<Index>& rows) {
        Matrix m(static_cast<Index>(rows.size()), all.samples());
        for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Index>(i)) = all.values.row(rows[i]);
        return m;
    };
    auto get = [&](const char* key) -> Index {
        auto it = meta.find(key);
        if (it == meta.end()) throw Error(Errc::parse_error, std::string("line 2: missing ") + key);
        return static_cast<Index>(csv::parse_double(it->second, 2));
    };
    TaskDataset ds;
    ds.task = meta.count("task") ? meta["task"] : "external";
    ds.input = TimeSeries(pick(in_rows), all.dt, in_names);
    ds.target = TimeSeries(pick(tgt_rows), all.dt, tgt_names);
    ds.washout_len = get("washout_len");
    ds.train_len = get("train_len");
    ds.test_len = get("test_len");
    ds.validate();
    return ds;
}

namespace {

TaskDataset make_rossler(const TaskSpec& spec)
{
    // Pilot run to find the native oscillation period.
    RosslerParams pilot;
    auto warm = rossler_trajectory(pilot, 20000);
    pilot.initial = {warm.values(0, warm.samples() - 1), warm.values(1, warm.samples() - 1),
                     warm.values(2, warm.samples() - 1)};
    const double t_osc = estimate_t_osc(rossler_trajectory(pilot, 1 << 15));

    const auto spt = spec.samples_per_tosc;
    require(spt >= 4, "rossler: samples_per_tosc must be >= 4", Errc::config_invalid);
    const Index substeps = (200 + spt - 1) / spt;
    RosslerParams p;
    p.dt = t_osc / static_cast<double>(spt * substeps);
    auto rng = make_rng(spec.seed, 0x524f53);
    std::uniform_real_distribution<double> jitter(-0.5, 0.5);
    p.initial = {1.0 + jitter(rng), 1.0 + jitter(rng), 1.0 + jitter(rng)};

    const auto transient_steps = static_cast<std::size_t>(std::llround(50.0 * t_osc / p.dt));
    auto s = p.initial;
    for (std::size_t i = 0; i < transient_steps; ++i) s = rossler_rk4_step(s, p);
    p.initial = s;

    const auto train = static_cast<Index>(std::llround(spec.train_periods * static_cast<double>(spt)));
    const auto test = static_cast<Index>(std::llround(spec.test_periods * static_cast<double>(spt)));
    const Index total = spec.washout_len + train + test;
    auto traj = rossler_trajectory(p, static_cast<std::size_t>((total - 1) * substeps + 1));

    Matrix in(1, total), tgt(2, total);
    for (Index i = 0; i < total; ++i) {
        in(0, i) = traj.values(0, i * substeps);
        tgt(0, i) = traj.values(1, i * substeps);
        tgt(1, i) = traj.values(2, i * substeps);
    }
    const double sample_dt = p.dt * static_cast<double>(substeps);
    TaskDataset ds{"rossler", TimeSeries(std::move(in), sample_dt, {"x"}),
                   TimeSeries(std::move(tgt), sample_dt, {"y", "z"}), spec.washout_len, train, test};
    return ds;
}

TaskDataset make_henon(const TaskSpec& spec)
{
    auto rng = make_rng(spec.seed, 0x48454e);
    std::uniform_real_distribution<double> start(-0.1, 0.1);
    const Index transient = 1000;
    const Index total = spec.washout_len + spec.train_len + spec.test_len;
    auto orbit = henon_orbit(static_cast<std::size_t>(transient + total), start(rng), start(rng));
    TaskDataset ds{"henon",
                   TimeSeries(orbit.values.block(0, transient, 1, total), 1.0, {"x"}),
                   TimeSeries(orbit.values.block(1, transient, 1, total), 1.0, {"y"}),
                   spec.washout_len, spec.train_len, spec.test_len};
    return ds;
}

TaskDataset make_nce(const TaskSpec& spec)
{
    // The first and last 10 samples see truncated channel support.
    const Index washout = std::max<Index>(spec.washout_len, 10);
    const Index total = washout + spec.train_len + spec.test_len + 10;
    auto seq = nce_sequences(static_cast<std::size_t>(total), spec.seed, spec.noise_snr_db);
    return {"nce", std::move(seq.received), std::move(seq.symbols), washout, spec.train_len,
            spec.test_len};
}

TaskDataset make_narma(const TaskSpec& spec)
{
    const Index total = spec.washout_len + spec.train_len + spec.test_len;
    for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
        auto rng = make_rng(spec.seed, 0x4e41524d41ULL + attempt);
        std::uniform_real_distribution<double> draw(0.0, 0.5);
        std::vector<double> u(static_cast<std::size_t>(total));
        for (auto& x : u) x = draw(rng);
        auto input = TimeSeries::scalar(u, 1.0, "u");
        try {
            auto target = narma10_target(input);
            return {"narma10", std::move(input), std::move(target), spec.washout_len,
                    spec.train_len, spec.test_len};
        } catch (const Error& e) {
            if (e.code() != Errc::narma_divergence) throw;
        }
    }
    throw Error(Errc::narma_divergence, "narma10: recurrence diverged for 10 consecutive seeds");
}

TaskDataset make_function(const TaskSpec& spec)
{
    auto pair = function_simulator_pair(spec.function_f0,
                                        static_cast<std::size_t>(spec.function_periods),
                                        static_cast<std::size_t>(spec.samples_per_period));
    const Index total = pair.input.samples();
    const Index usable = total - spec.washout_len;
    require(usable > 0, "function: washout consumes the whole series", Errc::config_invalid);
    require(spec.train_fraction > 0.0 && spec.train_fraction < 1.0,
            "function: train_fraction must lie strictly between 0 and 1 (empty split)",
            Errc::config_invalid);
    const auto train = static_cast<Index>(std::floor(spec.train_fraction * static_cast<double>(usable)));
    const Index test = usable - train;
    require(train > 0 && test > 0, "function: train/test split leaves an empty window",
            Errc::config_invalid);
    return {"function", std::move(pair.input), std::move(pair.target), spec.washout_len, train, test};
}

}  // namespace

TaskDataset make_task_dataset(const TaskSpec& spec)
{
    require(spec.washout_len >= 0, "task: washout_len must be >= 0", Errc::config_invalid);
    if (spec.name != "rossler" && spec.name != "function")
        require(spec.train_len > 0 && spec.test_len > 0, "task: train_len and test_len must be > 0",
                Errc::config_invalid);
    TaskDataset ds;
    if (spec.name == "rossler") ds = make_rossler(spec);
    else if (spec.name == "henon") ds = make_henon(spec);
    else if (spec.name == "nce") ds = make_nce(spec);
    else if (spec.name == "narma10") ds = make_narma(spec);
    else if (spec.name == "function") ds = make_function(spec);
    else throw Error(Errc::config_invalid, "unknown task '" + spec.name + "'");
    ds.validate();
    return ds;
}

}  // namespace wavecav
