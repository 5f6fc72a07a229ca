// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance [--only 1,3] [--expect-red 5,7]
// Exit status is 0 when every criterion not listed in --expect-red passes. Listed ones
// still run and still print FAIL; a listed criterion that passes is reported as such.

#include "wavecav/cavity.hpp"
#include "wavecav/config.hpp"
#include "wavecav/error.hpp"
#include "wavecav/harness.hpp"
#include "wavecav/readout.hpp"
#include "wavecav/spectrum.hpp"
#include "wavecav/tasks.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace wavecav;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const fs::path kConfigs = WAVECAV_CONFIG_DIR;
const fs::path kTmp = WAVECAV_TEST_TMP;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v)
{
    char b[64];
    std::snprintf(b, sizeof b, "%.4g", v);
    return b;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- 1 ---------------------------------------------------------------------------

Outcome ridge_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<Index> rows(5, 200), cols(100, 2000);
    std::normal_distribution<double> g(0.0, 1.0);
    const double lambdas[] = {1e-12, 1e-6, 1e-2};
    double worst = 0.0;
    for (int s = 0; s < 50; ++s) {
        const Index n = rows(rng), t = std::max(cols(rng), n + 1);
        FeatureMatrix fm;
        fm.values.resize(n + 1, t);
        for (Index i = 0; i < n; ++i)
            for (Index j = 0; j < t; ++j) fm.values(i, j) = g(rng);
        fm.values.row(n).setOnes();
        for (Index i = 0; i < n; ++i) fm.labels.push_back({static_cast<int>(i), 0, 0, 0});
        Matrix y(2, t);
        for (Index i = 0; i < y.size(); ++i) y.data()[i] = g(rng);
        const double lambda = lambdas[s % 3];

        auto w = train_ridge(fm, TimeSeries(y, 1.0), lambda, {0, t});

        // normal equations, explicit inverse
        Eigen::MatrixXd r = fm.values;
        Eigen::MatrixXd a = r * r.transpose();
        a.diagonal().array() += lambda;
        Eigen::MatrixXd ref = (Eigen::MatrixXd(y) * r.transpose()) * a.inverse();
        worst = std::max(worst, (Eigen::MatrixXd(w.weights) - ref).norm() / ref.norm());
    }
    const double secs = seconds_since(t0);
    return {worst <= 1e-8 && secs < 30.0, "max rel err " + fmt(worst) + ", " + fmt(secs) + " s"};
}

// ---- 2 ---------------------------------------------------------------------------

Outcome echo_state()
{
    std::mt19937_64 rng(777);
    std::uniform_int_distribution<int> kdist(50, 300);
    std::uniform_real_distribution<double> tdist(300e-12, 900e-12), u(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    const double nominal = static_cast<double>(weyl_mode_count(CavityConfig{}));

    double worst_time = 0.0, worst_rate = 0.0;
    bool ok = true;
    for (int c = 0; c < 20; ++c) {
        CavityConfig cfg;
        cfg.t_decay = tdist(rng);
        cfg.mode_density_scale = kdist(rng) / nominal;
        auto res = build_cavity(cfg, rng());
        const double gamma = res.damping;
        const double dt = 1.0 / (20.0 * res.max_frequency_hz());
        const auto n = static_cast<Index>(std::ceil(21.0 / gamma / dt));
        const Index hold = 8;
        Matrix m(1, n);
        for (Index i = 0; i < n; i += hold) m.block(0, i, 1, std::min(hold, n - i)).setConstant(u(rng));
        TimeSeries drive(m, dt);

        auto a = ModeState::zeros(res.n_modes()), b = a;
        for (Index k = 0; k < res.n_modes(); ++k) {
            a.a[k] = g(rng) / res.mode_freqs[k];
            a.adot[k] = g(rng);
            b.a[k] = g(rng) / res.mode_freqs[k];
            b.adot[k] = g(rng);
        }
        double t_conv = 0.0;
        try {
            t_conv = echo_state_check(res, drive, a, b);
        } catch (const Error&) {
            ok = false;
            continue;
        }
        worst_time = std::max(worst_time, t_conv * gamma);  // in units of T_decay

        // decay rate: log of the windowed peak of the port difference, fitted over 1..12 T_decay
        auto va = simulate_linear(res, drive, Execution::parallel, &a);
        auto vb = simulate_linear(res, drive, Execution::parallel, &b);
        const auto win = static_cast<Index>(std::ceil(0.5 / gamma / dt));
        std::vector<double> ts, ls;
        for (Index s = static_cast<Index>(1.0 / gamma / dt); s + win < static_cast<Index>(12.0 / gamma / dt); s += win) {
            double peak = 0.0;
            for (Index i = s; i < s + win; ++i)
                for (Index p = 0; p < res.n_ports(); ++p) peak = std::max(peak, std::abs(va.values(p, i) - vb.values(p, i)));
            ts.push_back((static_cast<double>(s) + 0.5 * static_cast<double>(win)) * dt);
            ls.push_back(std::log(peak));
        }
        const double tm = std::accumulate(ts.begin(), ts.end(), 0.0) / static_cast<double>(ts.size());
        const double lm = std::accumulate(ls.begin(), ls.end(), 0.0) / static_cast<double>(ls.size());
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            num += (ts[i] - tm) * (ls[i] - lm);
            den += (ts[i] - tm) * (ts[i] - tm);
        }
        const double rate = -num / den;
        worst_rate = std::max(worst_rate, std::abs(rate - gamma) / gamma);
    }
    ok = ok && worst_time <= 20.0 && worst_rate <= 0.10;
    return {ok, "worst convergence " + fmt(worst_time) + " T_decay, worst rate error " + fmt(100 * worst_rate) + "%"};
}

// ---- 3 ---------------------------------------------------------------------------

Outcome task_oracles()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::string> bad;

    // Henon
    {
        auto orbit = henon_orbit(1000, 0.1, 0.0);
        double x = 0.1, y = 0.0;
        for (Index i = 0; i < 1000; ++i) {
            if (orbit.values(0, i) != x || orbit.values(1, i) != y) {
                bad.push_back("henon");
                break;
            }
            const double xn = 1.0 - 1.4 * x * x + y;
            y = 0.3 * x;
            x = xn;
        }
    }
    // NARMA-10
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> d(0.0, 0.5);
        std::vector<double> u(2000);
        for (auto& v : u) v = d(rng);
        auto got = narma10_target(TimeSeries::scalar(u, 1.0, "u"));
        std::vector<double> y(u.size() + 1, 0.0);
        auto Y = [&](long t) { return t >= 0 ? y[static_cast<std::size_t>(t)] : 0.0; };
        auto U = [&](long t) { return t >= 0 ? u[static_cast<std::size_t>(t)] : 0.0; };
        bool same = true;
        for (long t = 0; t < static_cast<long>(u.size()); ++t) {
            double s = 0.0;
            for (long i = 0; i < 10; ++i) s += Y(t - i);
            y[static_cast<std::size_t>(t + 1)] = 0.3 * Y(t) + 0.05 * Y(t) * s + 1.5 * U(t - 9) * U(t) + 0.1;
            same = same && got.values(0, t) == y[static_cast<std::size_t>(t + 1)];
        }
        if (!same) bad.push_back("narma10");

        std::vector<double> zeros(200, 0.0);
        auto z = narma10_target(TimeSeries::scalar(zeros, 1.0, "u"));
        const double fixed = 0.7 - std::sqrt(0.49 - 0.2);  // 0.5 y^2 - 0.7 y + 0.1 = 0
        if (std::abs(z.values(0, 199) - fixed) > 1e-4 || std::abs(fixed - 0.16148) > 1e-5) bad.push_back("narma fixed point");
    }
    // NCE
    {
        std::vector<double> ones(50, 1.0);
        auto q = nce_channel(ones);
        double coeff = 0.0;
        for (double c : kNceTaps) coeff += c;
        if (std::abs(coeff - 1.161) > 1e-12 || std::abs(q[25] - 1.161) > 1e-12) bad.push_back("nce");
    }
    // Rossler RK4
    {
        auto rk = [](double dt, long steps) {
            std::array<double, 3> s{1.0, 1.0, 1.0};
            RosslerParams p;
            p.dt = dt;
            for (long i = 0; i < steps; ++i) s = rossler_rk4_step(s, p);
            return s;
        };
        auto dist = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
            return std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
        };
        const long n = 2000;  // 40 time units at dt = 0.02
        auto ref = rk(0.005, 4 * n);
        const double ratio = dist(rk(0.02, n), ref) / dist(rk(0.01, 2 * n), ref);
        if (!(ratio >= 8.0)) bad.push_back("rk4 ratio " + fmt(ratio));
    }
    const double secs = seconds_since(t0);
    std::string detail = bad.empty() ? "all oracles agree" : "mismatch:";
    for (const auto& b : bad) detail += " " + b;
    return {bad.empty() && secs < 10.0, detail + ", " + fmt(secs) + " s"};
}

// ---- 4 ---------------------------------------------------------------------------

Outcome harmonics()
{
    CavityConfig cfg;
    auto res = build_cavity(cfg, 4);
    const double f0 = 4e9, dt = 1.0 / (64.0 * f0);
    const Index n = 1 << 15;
    Matrix m(1, n);
    for (Index i = 0; i < n; ++i) m(0, i) = std::sin(2.0 * pi * f0 * static_cast<double>(i) * dt);
    TimeSeries drive(m, dt);
    calibrate_diode(res, drive);

    auto ratio = [&](const TimeSeries& ports) {
        // steady state only: drop the first 20 T_decay
        const auto skip = static_cast<Index>(20.0 / res.damping / dt);
        auto ch = ports.channel(0).subspan(static_cast<std::size_t>(skip));
        auto sp = magnitude_spectrum(ch, dt, Window::hann, 1);
        auto line = [&](double f) {
            const auto k = static_cast<std::size_t>(std::llround(f / sp.df));
            double p = 0.0;
            for (std::size_t j = k - 3; j <= k + 3; ++j) p += sp.magnitude[j] * sp.magnitude[j];
            return p;
        };
        return line(2.0 * f0) / line(f0);
    };
    const double with_diode = ratio(simulate(res, drive));
    const double linear = ratio(simulate_linear(res, drive));  // alpha = 1: g(v) = v
    return {with_diode >= 0.01 && linear < 1e-6,
            "2f0/f0 power " + fmt(with_diode) + " with diode, " + fmt(linear) + " bypassed"};
}

// ---- 5 ---------------------------------------------------------------------------

Outcome size_scaling()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(kConfigs / "narma10_ablation.json");
    auto ab = size_ablation(cfg, cfg.ablation.sizes, cfg.ablation.n_seeds);
    std::string detail = "median NMSE";
    bool trend = true, desk = true;
    double running_min = std::numeric_limits<double>::infinity();
    for (const auto& r : ab.rows) {
        detail += " " + std::to_string(r.n_r) + ":" + fmt(r.median);
        trend = trend && r.median <= 1.10 * running_min;
        running_min = std::min(running_min, r.median);
        if (r.n_r >= 90) desk = desk && r.median <= 0.1;
    }
    const auto find = [&](Index n) {
        for (const auto& r : ab.rows)
            if (r.n_r == n) return r.median;
        return std::numeric_limits<double>::quiet_NaN();
    };
    const double ratio = find(360) / find(15);
    const double secs = seconds_since(t0);
    detail += "; ratio(360/15) " + fmt(ratio) + (ratio <= 0.5 ? "" : " > 0.5") + "; trend " + (trend ? "ok" : "broken") +
              "; desk " + (desk ? "ok" : "> 0.1") + "; " + fmt(secs) + " s";
    return {trend && desk && ratio <= 0.5 && secs < 600.0, detail};
}

// ---- 6 ---------------------------------------------------------------------------

Outcome rossler_observer()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(kConfigs / "rossler.json");
    const auto dir = kTmp / "rossler";
    fs::remove_all(dir);
    auto rec = run_experiment(cfg, {Execution::parallel, dir, true});
    const Index n_r = cfg.ensemble.n_boundary * cfg.ensemble.n_freq * cfg.cavity.n_ports * cfg.timing.taps_per_bin;
    const double y = rec.report.nmse.at(0), z = rec.report.nmse.at(1);
    auto pred = read_csv(dir / "predictions.csv");
    bool traces = false;
    for (Index c = 0; c < pred.channels(); ++c) traces = traces || pred.channel_name(c) == "pred.z";
    const double secs = seconds_since(t0);
    return {n_r >= 600 && y <= 0.05 && z <= 0.05 && traces && secs < 1200.0,
            "N_r " + std::to_string(n_r) + ", NMSE y " + fmt(y) + " z " + fmt(z) + ", traces in " +
                (dir / "predictions.csv").string() + ", " + fmt(secs) + " s"};
}

// ---- 7 ---------------------------------------------------------------------------

Outcome memory_matching()
{
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = load_config(kConfigs / "narma10.json");
    auto sw = sweep_heatmap(cfg, cfg.sweep.t_axis, cfg.sweep.decay_axis);
    if (!sw.argmin) return {false, "no sweep cell completed"};
    const auto& best = sw.cells[static_cast<std::size_t>(*sw.argmin)];
    const double ratio = best.t_decay / best.t_value;
    // best cell inside the window, for context
    double best_in = std::numeric_limits<double>::infinity();
    for (const auto& c : sw.cells) {
        const double r = c.t_decay / c.t_value;
        if (c.done && r >= 4.5 && r <= 18.0) best_in = std::min(best_in, c.mean_nmse);
    }
    const double secs = seconds_since(t0);
    return {ratio >= 4.5 && ratio <= 18.0 && secs < 1800.0,
            "argmin T_bin " + fmt(best.t_value * 1e12) + " ps, T_decay " + fmt(best.t_decay * 1e12) + " ps, ratio " +
                fmt(ratio) + ", NMSE " + fmt(best.mean_nmse) + " (best inside [4.5, 18]: " + fmt(best_in) + "), " +
                fmt(secs) + " s"};
}

// ---- 8 ---------------------------------------------------------------------------

Outcome mode_count()
{
    CavityConfig cfg;  // A = 0.115 m^2, f0 = 4 GHz
    const double per_100 = static_cast<double>(weyl_mode_count(cfg)) / (cfg.bandwidth / 100e6);
    // realized cavity: modes in 100 MHz windows around f0
    auto res = build_cavity(cfg, 1);
    double counted = 0.0;
    int windows = 0;
    for (double lo = cfg.f0 - 1e9; lo + 100e6 <= cfg.f0 + 1e9; lo += 100e6, ++windows)
        for (double w : res.mode_freqs) {
            const double f = w / (2.0 * pi);
            if (f >= lo && f < lo + 100e6) counted += 1.0;
        }
    const double realized = counted / windows;
    return {std::abs(per_100 - 3.0) <= 1.0 && std::abs(realized - 3.0) <= 1.0,
            "Weyl " + fmt(per_100) + " / 100 MHz, realized " + fmt(realized) + " / 100 MHz"};
}

// ---- 9 ---------------------------------------------------------------------------

Outcome reproducibility()
{
    const fs::path cli = WAVECAV_CLI;
    const auto d1 = kTmp / "repro1", d2 = kTmp / "repro2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    const auto cfg_path = kConfigs / "narma10.json";
    for (const auto& d : {d1, d2}) {
        const std::string cmd = "\"" + cli.string() + "\" run \"" + cfg_path.string() + "\" --out-dir \"" + d.string() +
                                "\" > \"" + (d.string() + ".stdout") + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0) return {false, "cli run failed: " + cmd};
    }
    bool same_files = true;
    for (const char* f : {"results.csv", "predictions.csv", "weights.json", "reservoir.json"})
        same_files = same_files && fs::exists(d1 / f) && slurp(d1 / f) == slurp(d2 / f);

    auto cfg = load_config(cfg_path);
    auto serial = prepare_run(cfg, Execution::serial);
    auto parallel = prepare_run(cfg, Execution::parallel);
    const bool same_features = serial.features.values == parallel.features.values &&
                               serial.features.labels == parallel.features.labels;
    return {same_files && same_features, std::string("run CSVs ") + (same_files ? "byte-identical" : "DIFFER") +
                                             ", features serial vs parallel " + (same_features ? "identical" : "DIFFER")};
}

// ---- 10 --------------------------------------------------------------------------

Outcome function_and_nce()
{
    auto fcfg = load_config(kConfigs / "function.json");
    auto ncfg = load_config(kConfigs / "nce.json");
    auto n_r = [](const ExperimentConfig& c) {
        return c.ensemble.n_boundary * c.ensemble.n_freq * c.cavity.n_ports * c.timing.taps_per_bin;
    };
    auto f = run_experiment(fcfg, {Execution::parallel, std::nullopt, false});
    auto q = run_experiment(ncfg, {Execution::parallel, std::nullopt, false});
    const double fn = f.report.nmse.at(0);
    const double ser = q.report.symbol_error_rate.value_or(1.0);
    const bool fok = fn <= 0.01 && n_r(fcfg) >= 90;
    const bool nok = ser <= 0.02 && n_r(ncfg) >= 90 && !ncfg.task.noise_snr_db;
    return {fok && nok, "sin^3 NMSE " + fmt(fn) + (fok ? " ok" : " FAIL") + " (N_r " + std::to_string(n_r(fcfg)) +
                            "); NCE SER " + fmt(100 * ser) + "%" + (nok ? " ok" : " > 2%") + " (N_r " +
                            std::to_string(n_r(ncfg)) + ")"};
}

std::set<int> parse_list(const std::string& s)
{
    std::set<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance criteria"};
    std::string only, expect_red;
    app.add_option("--only", only, "comma-separated criteria to run");
    app.add_option("--expect-red", expect_red, "criteria known to fail; they do not set the exit status");
    CLI11_PARSE(app, argc, argv);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"ridge oracle equivalence", ridge_oracle},
        {"echo-state property", echo_state},
        {"task-generator oracles", task_oracles},
        {"diode harmonic generation", harmonics},
        {"size-scaling trend", size_scaling},
        {"rossler observer", rossler_observer},
        {"memory-matching optimum", memory_matching},
        {"mode-count calibration", mode_count},
        {"reproducibility", reproducibility},
        {"function simulator and equalization", function_and_nce},
    };
    const auto selected = parse_list(only);
    const auto red = parse_list(expect_red);
    fs::create_directories(kTmp);

    int unexpected = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::string tag = o.pass ? "[PASS]" : "[FAIL]";
        if (red.count(id)) tag += o.pass ? " (listed as known-red, now passing)" : " (known)";
        else if (!o.pass) ++unexpected;
        std::cout << tag << " " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return unexpected == 0 ? 0 : 1;
}
