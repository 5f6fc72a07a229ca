#include "doctest.h"

#include "wavecav/config.hpp"
#include "wavecav/error.hpp"
#include "wavecav/harness.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace wavecav;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    fs::path p = fs::path(WAVECAV_TEST_TMP) / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSmall = R"({
  "task": {"name": "narma10", "train_len": 400, "test_len": 100},
  "cavity": {"t_decay_ps": 300},
  "ensemble": {"n_boundary": 2},
  "readout": {"lambda": 1e-6},
  "seeds": {"cavity": 5, "ensemble": 6, "task": 7, "ablation": 8}
})";

ExperimentConfig small() { return config_from_json(kSmall); }

}  // namespace

TEST_CASE("config hash is canonical")
{
    const auto a = config_from_json(R"({"task": {"name": "henon", "train_len": 10}, "cavity": {"t_decay_ps": 400}})");
    const auto b = config_from_json(R"({"cavity": {"t_decay_ps": 400}, "task": {"train_len": 10, "name": "henon"}})");
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 16);
    const auto c = config_from_json(R"({"task": {"name": "henon", "train_len": 11}, "cavity": {"t_decay_ps": 400}})");
    CHECK(config_hash(a) != config_hash(c));
    // canonical form parses back to the same configuration
    CHECK(config_hash(config_from_json(canonical_json(a))) == config_hash(a));
    CHECK(a.cavity.t_decay == doctest::Approx(400e-12));
}

TEST_CASE("config errors")
{
    auto code_of = [](const std::string& text) {
        try {
            config_from_json(text);
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::io_error;  // sentinel: nothing thrown
    };
    CHECK(code_of("{not json") == Errc::parse_error);
    CHECK(code_of(R"({"task": {"name": "bogus"}})") == Errc::config_invalid);
    CHECK(code_of(R"({"cavity": {"t_decay_ps": -1}})") == Errc::config_invalid);
    CHECK(code_of(R"({"task": {"name": "function", "train_fraction": 1.0}})") == Errc::config_invalid);
    CHECK(code_of(R"({"readout": {"nmse_normalization": "sideways"}})") == Errc::config_invalid);
    CHECK_THROWS_AS(load_config(scratch("missing") / "nope.json"), Error);
}

TEST_CASE("seed override touches every seed deterministically")
{
    auto a = small(), b = small();
    a.override_seeds(99);
    b.override_seeds(99);
    CHECK(config_hash(a) == config_hash(b));
    CHECK(a.seeds.cavity != a.seeds.task);
    auto c = small();
    c.override_seeds(100);
    CHECK(c.seeds.cavity != a.seeds.cavity);
}

TEST_CASE("timing derivations")
{
    auto cfg = small();
    const double dt = cfg.waveform_dt();
    const double n = cfg.task_bin() / dt;
    CHECK(n == doctest::Approx(std::round(n)).epsilon(1e-12));
    CHECK(n >= 8.0);
    CHECK(dt <= 1.0 / (20.0 * (cfg.cavity.f0 + cfg.cavity.bandwidth / 2.0)) * (1 + 1e-12));
    CHECK(dt <= cfg.timing.waveform_dt * (1 + 1e-12));
    // washout: max(ceil(10 T_decay / t_bin), 50)
    CHECK(cfg.washout_steps() == 50);
    cfg.cavity.t_decay = 900e-12;
    CHECK(cfg.washout_steps() == 150);
}

TEST_CASE("feature csv round trip and errors")
{
    FeatureMatrix fm;
    fm.values.resize(3, 2);
    fm.values << 0.5, -1.25, 3.0e-9, 7.0, 1.0, 1.0;
    fm.labels = {{0, 0, 0, 0}, {1, 2, 1, 0}};
    const auto path = scratch("features") / "f.csv";
    fs::create_directories(path.parent_path());
    write_feature_csv(path, fm);
    auto back = load_external_features(path);
    CHECK(back.values == fm.values);
    CHECK(back.labels == fm.labels);

    {
        std::ofstream out(path);
        out << "a,b,c\n1,2,3\n4,5,6\n";  // no bias column
    }
    try {
        load_external_features(path);
        FAIL("expected parse_error");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse_error);
    }
    {
        std::ofstream out(path);
        out << "u,v,bias\n1,2,1\n3,4,1\n";  // hand-written columns
    }
    auto hand = load_external_features(path);
    CHECK(hand.rows() == 3);
    CHECK(hand.cols() == 2);
    CHECK(hand.values(1, 1) == 4.0);
}

TEST_CASE("run pipeline: artifacts, byte-identical reruns, serial equals parallel")
{
    auto cfg = small();
    const auto d1 = scratch("run1"), d2 = scratch("run2");
    auto r1 = run_experiment(cfg, {Execution::parallel, d1, true});
    auto r2 = run_experiment(cfg, {Execution::serial, d2, true});
    for (const char* f : {"results.csv", "predictions.csv", "reservoir.json", "weights.json", "record.json"})
        CHECK(fs::exists(d1 / f));
    CHECK(slurp(d1 / "results.csv") == slurp(d2 / "results.csv"));
    CHECK(slurp(d1 / "predictions.csv") == slurp(d2 / "predictions.csv"));
    CHECK(slurp(d1 / "weights.json") == slurp(d2 / "weights.json"));
    CHECK(r1.config_hash == config_hash(cfg));
    CHECK(r1.report.nmse.size() == 1);
    CHECK(r1.report.nmse[0] < 1.0);
    CHECK(slurp(d1 / "record.json").find(r1.config_hash) != std::string::npos);

    // replay from the saved reservoir
    auto res = load_reservoir(d1 / "reservoir.json");
    auto prep = prepare_run(cfg);
    CHECK(res.mode_freqs == prep.base.mode_freqs);
    CHECK(res.port_gain == prep.base.port_gain);
}

TEST_CASE("failed runs leave no artifacts and carry a stage tag")
{
    auto cfg = small();
    const auto dir = scratch("failed");
    // a directory squatting on weights.json makes the write stage fail midway
    fs::create_directories(dir / "weights.json" / "keep");
    try {
        run_experiment(cfg, {Execution::parallel, dir, true});
        FAIL("expected failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "write");
        CHECK(std::string(e.what()).rfind("[write]", 0) == 0);
    }
    CHECK_FALSE(fs::exists(dir / "results.csv"));
    CHECK_FALSE(fs::exists(dir / "predictions.csv"));
    CHECK_FALSE(fs::exists(dir / "reservoir.json"));
    CHECK_FALSE(fs::exists(dir / "record.json"));

    auto bad = small();
    bad.cavity.bandwidth = 0.05e9;  // too few modes
    const auto dir2 = scratch("failed2");
    try {
        run_experiment(bad, {Execution::parallel, dir2, true});
        FAIL("expected failure");
    } catch (const StageError& e) {
        CHECK(e.stage() == "cavity");
        CHECK(e.code() == Errc::band_too_narrow);
    }
    CHECK_FALSE(fs::exists(dir2));
}

TEST_CASE("sweep: single cell, order independence")
{
    auto cfg = small();
    auto one = sweep_heatmap(cfg, {60e-12}, {300e-12});
    REQUIRE(one.cells.size() == 1);
    REQUIRE(one.argmin);
    CHECK(one.deviation_pct(one.cells[0]) == 0.0);
    CHECK(one.grid_csv(true).find("decay_300") != std::string::npos);

    const std::vector<double> ts{60e-12, 120e-12}, ds{150e-12, 300e-12};
    auto fwd = sweep_heatmap(cfg, ts, ds);
    auto rev = sweep_heatmap(cfg, {ts[1], ts[0]}, {ds[1], ds[0]}, Execution::serial);
    for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j) {
            const auto& a = fwd.cell(i, j);
            const auto& b = rev.cell(1 - i, 1 - j);
            CHECK(a.t_value == b.t_value);
            CHECK(a.t_decay == b.t_decay);
            CHECK(a.mean_nmse == b.mean_nmse);
        }
    const auto& best = fwd.cells[static_cast<std::size_t>(*fwd.argmin)];
    for (const auto& c : fwd.cells) CHECK(c.mean_nmse >= best.mean_nmse);
    // cell matches an independent run at those settings
    auto single = cfg;
    single.timing.t_bin = ts[1];
    single.cavity.t_decay = ds[0];
    auto rec = run_experiment(single, {Execution::parallel, std::nullopt, false});
    CHECK(fwd.cell(1, 0).nmse[0] == rec.report.nmse[0]);
}

TEST_CASE("sweep keeps failed cells")
{
    auto cfg = small();
    auto s = sweep_heatmap(cfg, {60e-12}, {20e-12, 300e-12});
    CHECK_FALSE(s.cell(0, 0).done);
    CHECK_FALSE(s.cell(0, 0).error.empty());
    CHECK_MESSAGE(s.cell(0, 1).done, s.cell(0, 1).error);
    CHECK(s.cells_csv().find("failed") != std::string::npos);
}

TEST_CASE("ablation: full size reproduces the run, deterministic, quantiles")
{
    auto cfg = small();
    const auto full_nr = 2 * 3;
    auto a = size_ablation(cfg, {2, full_nr}, 3);
    auto b = size_ablation(cfg, {2, full_nr}, 3);
    CHECK(a.full_n_r == full_nr);
    REQUIRE(a.rows.size() == 2);
    CHECK(a.rows[0].nmse == b.rows[0].nmse);
    auto rec = run_experiment(cfg, {Execution::parallel, std::nullopt, false});
    for (double v : a.rows[1].nmse) CHECK(v == rec.report.nmse[0]);
    CHECK(a.rows[0].q25 <= a.rows[0].median);
    CHECK(a.rows[0].median <= a.rows[0].q75);
    CHECK(a.csv().rfind("n_r,median_nmse,q25_nmse,q75_nmse", 0) == 0);
    CHECK_THROWS_AS(size_ablation(cfg, {full_nr + 1}, 2), Error);

    CHECK(quantile({1, 2, 3, 4}, 0.5) == doctest::Approx(2.5));
    CHECK(quantile({1, 2, 3, 4}, 0.25) == doctest::Approx(1.75));
    CHECK(quantile({5}, 0.75) == 5.0);
}

TEST_CASE("external features train a readout")
{
    // features: two columns of a known signal; target is a linear mix
    const Index t = 200;
    FeatureMatrix fm;
    fm.values.resize(3, t);
    Matrix y(1, t);
    for (Index i = 0; i < t; ++i) {
        const double u = std::sin(0.1 * static_cast<double>(i)), v = std::cos(0.37 * static_cast<double>(i));
        fm.values(0, i) = u;
        fm.values(1, i) = v;
        fm.values(2, i) = 1.0;
        y(0, i) = 2.0 * u - 0.5 * v + 0.25;
    }
    fm.labels = {{0, 0, 0, 0}, {0, 0, 1, 0}};
    const auto dir = scratch("external");
    fs::create_directories(dir);
    write_feature_csv(dir / "features.csv", fm);
    write_csv(dir / "targets.csv", TimeSeries(y, 1.0, {"y"}));
    ReadoutConfig rc;
    rc.lambda = 1e-9;
    auto rec = train_external(dir / "features.csv", dir / "targets.csv", rc, dir / "out");
    CHECK(rec.report.nmse[0] < 1e-10);
    CHECK(rec.report.train_cols == ColumnRange{0, 160});
    CHECK(rec.report.test_cols == ColumnRange{160, 200});
    CHECK(fs::exists(dir / "out" / "weights.json"));

    write_csv(dir / "short.csv", TimeSeries(y.leftCols(100), 1.0, {"y"}));
    CHECK_THROWS_AS(train_external(dir / "features.csv", dir / "short.csv", rc, dir / "out2"), Error);
}
