// wavecav: command-line front end for cavity reservoir experiments.

#include "wavecav/config.hpp"
#include "wavecav/error.hpp"
#include "wavecav/harness.hpp"
#include "wavecav/tasks.hpp"

#include "CLI11.hpp"

#include <omp.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace wavecav;

namespace {

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StageError("write", Error(Errc::io_error, "cannot write " + path.string()));
    f << text;
}

ExperimentConfig load(const std::string& path, const std::optional<std::uint64_t>& seed)
{
    try {
        auto c = load_config(path);
        if (seed) c.override_seeds(*seed);
        return c;
    } catch (const Error& e) {
        throw StageError("config", e);
    }
}

void print_report(const RunRecord& rec)
{
    std::cout << EvalReport::csv_header(rec.report.channels, rec.report.symbol_error_rate.has_value())
              << '\n'
              << rec.report.csv_row() << '\n';
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Wave-chaotic cavity reservoir computing simulator"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed_override;
    std::string out_dir;
    int jobs = 0;
    app.add_option("--seed-override", seed_override, "Replace every configured seed")
        ->option_text("SEED");
    app.add_option("--out-dir", out_dir, "Output directory (overrides the config)");
    app.add_option("--jobs", jobs, "Worker threads (default: OpenMP default)")->check(CLI::PositiveNumber);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run one experiment");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* sweep = app.add_subcommand("sweep", "T_bin (or T_osc) x T_decay heat map");
    sweep->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* ablate_cmd = app.add_subcommand("ablate", "Median NMSE versus feature count");
    ablate_cmd->add_option("config", config_path, "Experiment config (JSON)")->required();

    std::string task_name, task_out;
    TaskSpec task_spec;
    auto* gen = app.add_subcommand("gen-task", "Write a task dataset CSV");
    gen->add_option("task", task_name, "rossler | henon | nce | function | narma10")->required();
    gen->add_option("out", task_out, "Output CSV")->required();
    gen->add_option("--train-len", task_spec.train_len, "Training samples");
    gen->add_option("--test-len", task_spec.test_len, "Test samples");
    gen->add_option("--washout", task_spec.washout_len, "Leading washout samples");

    std::string features_path, targets_path;
    auto* ext = app.add_subcommand("train-external", "Train a readout on measured features");
    ext->add_option("features", features_path, "Feature matrix CSV")->required();
    ext->add_option("targets", targets_path, "Target CSV")->required();

    CLI11_PARSE(app, argc, argv);
    if (jobs > 0) omp_set_num_threads(jobs);

    try {
        if (*run) {
            auto c = load(config_path, seed_override);
            RunOptions opt;
            if (!out_dir.empty()) opt.out_dir = out_dir;
            auto rec = run_experiment(c, opt);
            print_report(rec);
            std::cerr << "config " << rec.config_hash << ", " << rec.duration_s << " s, record "
                      << rec.artifacts.at("record").string() << '\n';
        } else if (*sweep) {
            auto c = load(config_path, seed_override);
            if (c.sweep.t_axis.empty() || c.sweep.decay_axis.empty())
                throw StageError("config", Error(Errc::config_invalid, "sweep needs t_axis_ps and decay_axis_ps"));
            const fs::path dir = out_dir.empty() ? c.output_dir : fs::path(out_dir);
            auto res = sweep_heatmap(c, c.sweep.t_axis, c.sweep.decay_axis);
            write_file(dir / "sweep_cells.csv", res.cells_csv());
            write_file(dir / "sweep_nmse.csv", res.grid_csv(false));
            write_file(dir / "sweep_deviation.csv", res.grid_csv(true));
            std::cout << res.grid_csv(false);
            if (res.argmin) {
                const auto& best = res.cells[static_cast<std::size_t>(*res.argmin)];
                std::cout << "argmin t=" << best.t_value * 1e12 << " ps, t_decay=" << best.t_decay * 1e12
                          << " ps, nmse=" << best.mean_nmse << '\n';
            } else {
                std::cerr << "[sweep] every cell failed\n";
                return 3;
            }
        } else if (*ablate_cmd) {
            auto c = load(config_path, seed_override);
            if (c.ablation.sizes.empty())
                throw StageError("config", Error(Errc::config_invalid, "ablation needs sizes"));
            const fs::path dir = out_dir.empty() ? c.output_dir : fs::path(out_dir);
            auto res = size_ablation(c, c.ablation.sizes, c.ablation.n_seeds);
            write_file(dir / "ablation.csv", res.csv());
            std::cout << res.csv();
        } else if (*gen) {
            task_spec.name = task_name;
            if (seed_override) task_spec.seed = *seed_override;
            TaskDataset ds;
            try {
                ds = make_task_dataset(task_spec);
            } catch (const Error& e) {
                throw StageError("task", e);
            }
            try {
                fs::path p = out_dir.empty() ? fs::path(task_out) : fs::path(out_dir) / task_out;
                if (p.has_parent_path()) fs::create_directories(p.parent_path());
                write_dataset_csv(p, ds);
            } catch (const Error& e) {
                throw StageError("write", e);
            }
        } else if (*ext) {
            auto rec = train_external(features_path, targets_path, ReadoutConfig{},
                                      out_dir.empty() ? fs::path("wavecav-external") : fs::path(out_dir));
            print_report(rec);
        }
    } catch (const StageError& e) {
        std::cerr << "error " << errc_name(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        std::cerr << "error " << errc_name(e.code()) << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
