#include "wavecav/config.hpp"

#include "wavecav/error.hpp"
#include "wavecav/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace wavecav {

using nlohmann::json;

namespace {

constexpr double kPs = 1e-12;
constexpr double kGHz = 1e9;

template <typename T>
void read_opt(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<T>();
}

void read_ps(const json& j, const char* key, double& out)
{
    if (j.contains(key) && !j.at(key).is_null()) out = j.at(key).get<double>() * kPs;
}

std::vector<double> ps_list(const json& j, const char* key)
{
    std::vector<double> out;
    if (j.contains(key) && !j.at(key).is_null())
        for (double v : j.at(key).get<std::vector<double>>()) out.push_back(v * kPs);
    return out;
}

std::vector<double> to_ps(const std::vector<double>& v)
{
    std::vector<double> out;
    for (double x : v) out.push_back(x / kPs);
    return out;
}

const json& section(const json& root, const char* key)
{
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    const auto& s = root.at(key);
    if (!s.is_object()) throw Error(Errc::config_invalid, std::string("config: '") + key + "' must be an object");
    return s;
}

}  // namespace

double ExperimentConfig::task_bin() const
{
    if (task.name == "rossler") return timing.t_osc / static_cast<double>(task.samples_per_tosc);
    if (task.name == "function")
        return 1.0 / (task.function_f0 * static_cast<double>(task.samples_per_period));
    return timing.t_bin;
}

double ExperimentConfig::waveform_dt() const
{
    const double f_hi = cavity.f0 + cavity.bandwidth / 2.0;
    const double dt_max = std::min(timing.waveform_dt, 1.0 / (20.0 * f_hi));
    const double bin = task_bin();
    const auto per_bin = std::max<long long>(8, static_cast<long long>(std::ceil(bin / dt_max - 1e-9)));
    return bin / static_cast<double>(per_bin);
}

Index ExperimentConfig::washout_steps() const
{
    if (readout.washout) return *readout.washout;
    return std::max<Index>(50, static_cast<Index>(std::ceil(10.0 * cavity.t_decay / task_bin() - 1e-9)));
}

void ExperimentConfig::validate() const
{
    require(std::find(kTaskNames.begin(), kTaskNames.end(), task.name) != kTaskNames.end(),
            "config: unknown task '" + task.name + "'", Errc::config_invalid);
    cavity.validate();
    ensemble.validate();
    require(timing.t_bin > 0.0 && timing.t_osc > 0.0 && timing.waveform_dt > 0.0,
            "config: timing values must be positive", Errc::config_invalid);
    require(timing.taps_per_bin >= 1, "config: taps_per_bin must be >= 1", Errc::config_invalid);
    require(readout.validation_fraction > 0.0 && readout.validation_fraction < 1.0,
            "config: validation_fraction must lie in (0, 1)", Errc::config_invalid);
    require(readout.lambda || !readout.lambda_grid.empty(), "config: lambda grid is empty",
            Errc::config_invalid);
    if (readout.lambda) require(*readout.lambda >= 0.0, "config: lambda must be >= 0", Errc::config_invalid);
    require(diode.reverse_slope >= 0.0 && diode.reverse_slope < 1.0 && diode.knee_fraction > 0.0,
            "config: diode parameters out of range", Errc::config_invalid);
    if (task.name == "function")
        require(task.train_fraction > 0.0 && task.train_fraction < 1.0,
                "config: function task train/test split leaves an empty window", Errc::config_invalid);
    else if (task.name != "rossler")
        require(task.train_len > 0 && task.test_len > 0, "config: train_len and test_len must be > 0",
                Errc::config_invalid);
    else
        require(task.train_periods > 0.0 && task.test_periods > 0.0,
                "config: rossler train/test periods must be > 0", Errc::config_invalid);
    require(ablation.n_seeds >= 1, "config: ablation n_seeds must be >= 1", Errc::config_invalid);
    for (auto s : ablation.sizes) require(s >= 1, "config: ablation sizes must be >= 1", Errc::config_invalid);
}

void ExperimentConfig::override_seeds(std::uint64_t seed)
{
    seeds.cavity = derive_seed(seed, 1);
    seeds.ensemble = derive_seed(seed, 2);
    seeds.task = derive_seed(seed, 3);
    seeds.ablation = derive_seed(seed, 4);
}

ExperimentConfig config_from_json(const std::string& text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::parse_error, std::string("config: ") + e.what());
    }
    ExperimentConfig c;
    try {
        const auto& t = section(root, "task");
        read_opt(t, "name", c.task.name);
        read_opt(t, "train_len", c.task.train_len);
        read_opt(t, "test_len", c.task.test_len);
        read_opt(t, "samples_per_tosc", c.task.samples_per_tosc);
        read_opt(t, "train_periods", c.task.train_periods);
        read_opt(t, "test_periods", c.task.test_periods);
        if (t.contains("noise_snr_db") && !t.at("noise_snr_db").is_null())
            c.task.noise_snr_db = t.at("noise_snr_db").get<double>();
        if (t.contains("function_f0_ghz")) c.task.function_f0 = t.at("function_f0_ghz").get<double>() * kGHz;
        read_opt(t, "function_periods", c.task.function_periods);
        read_opt(t, "samples_per_period", c.task.samples_per_period);
        read_opt(t, "train_fraction", c.task.train_fraction);

        const auto& cav = section(root, "cavity");
        read_opt(cav, "area_m2", c.cavity.area);
        if (cav.contains("f0_ghz")) c.cavity.f0 = cav.at("f0_ghz").get<double>() * kGHz;
        if (cav.contains("bandwidth_ghz")) c.cavity.bandwidth = cav.at("bandwidth_ghz").get<double>() * kGHz;
        read_ps(cav, "t_decay_ps", c.cavity.t_decay);
        read_opt(cav, "n_ports", c.cavity.n_ports);
        read_opt(cav, "mode_density_scale", c.cavity.mode_density_scale);

        const auto& d = section(root, "diode");
        read_opt(d, "reverse_slope", c.diode.reverse_slope);
        read_opt(d, "knee_fraction", c.diode.knee_fraction);
        read_opt(d, "threshold_fraction", c.diode.threshold_fraction);
        read_opt(d, "pilot_samples", c.diode.pilot_samples);

        const auto& e = section(root, "ensemble");
        read_opt(e, "n_boundary", c.ensemble.n_boundary);
        read_opt(e, "n_freq", c.ensemble.n_freq);
        read_opt(e, "perturb_strength", c.ensemble.perturb_strength);
        read_opt(e, "betas", c.ensemble.betas);

        const auto& r = section(root, "readout");
        if (r.contains("lambda") && !r.at("lambda").is_null()) c.readout.lambda = r.at("lambda").get<double>();
        read_opt(r, "lambda_grid", c.readout.lambda_grid);
        read_opt(r, "validation_fraction", c.readout.validation_fraction);
        if (r.contains("washout") && !r.at("washout").is_null()) c.readout.washout = r.at("washout").get<Index>();
        if (r.contains("nmse_normalization")) {
            auto n = r.at("nmse_normalization").get<std::string>();
            if (n == "truth") c.readout.normalization = NmseNormalization::truth_power;
            else if (n == "output") c.readout.normalization = NmseNormalization::output_power;
            else throw Error(Errc::config_invalid, "config: nmse_normalization must be 'truth' or 'output'");
        }

        const auto& tm = section(root, "timing");
        read_ps(tm, "t_bin_ps", c.timing.t_bin);
        read_ps(tm, "t_osc_ps", c.timing.t_osc);
        read_ps(tm, "waveform_dt_ps", c.timing.waveform_dt);
        read_opt(tm, "taps_per_bin", c.timing.taps_per_bin);

        const auto& sw = section(root, "sweep");
        c.sweep.t_axis = ps_list(sw, "t_axis_ps");
        c.sweep.decay_axis = ps_list(sw, "decay_axis_ps");

        const auto& ab = section(root, "ablation");
        read_opt(ab, "sizes", c.ablation.sizes);
        read_opt(ab, "n_seeds", c.ablation.n_seeds);

        const auto& s = section(root, "seeds");
        read_opt(s, "cavity", c.seeds.cavity);
        read_opt(s, "ensemble", c.seeds.ensemble);
        read_opt(s, "task", c.seeds.task);
        read_opt(s, "ablation", c.seeds.ablation);

        if (root.contains("output_dir")) c.output_dir = root.at("output_dir").get<std::string>();
        read_opt(root, "write_features", c.write_features);
    } catch (const json::exception& e) {
        throw Error(Errc::config_invalid, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return config_from_json(ss.str());
}

std::string canonical_json(const ExperimentConfig& c)
{
    json j;
    j["task"] = {{"name", c.task.name},
                 {"train_len", c.task.train_len},
                 {"test_len", c.task.test_len},
                 {"samples_per_tosc", c.task.samples_per_tosc},
                 {"train_periods", c.task.train_periods},
                 {"test_periods", c.task.test_periods},
                 {"noise_snr_db", c.task.noise_snr_db ? json(*c.task.noise_snr_db) : json(nullptr)},
                 {"function_f0_ghz", c.task.function_f0 / kGHz},
                 {"function_periods", c.task.function_periods},
                 {"samples_per_period", c.task.samples_per_period},
                 {"train_fraction", c.task.train_fraction}};
    j["cavity"] = {{"area_m2", c.cavity.area},
                   {"f0_ghz", c.cavity.f0 / kGHz},
                   {"bandwidth_ghz", c.cavity.bandwidth / kGHz},
                   {"t_decay_ps", c.cavity.t_decay / kPs},
                   {"n_ports", c.cavity.n_ports},
                   {"mode_density_scale", c.cavity.mode_density_scale}};
    j["diode"] = {{"reverse_slope", c.diode.reverse_slope},
                  {"knee_fraction", c.diode.knee_fraction},
                  {"threshold_fraction", c.diode.threshold_fraction},
                  {"pilot_samples", c.diode.pilot_samples}};
    j["ensemble"] = {{"n_boundary", c.ensemble.n_boundary},
                     {"n_freq", c.ensemble.n_freq},
                     {"perturb_strength", c.ensemble.perturb_strength},
                     {"betas", c.ensemble.betas}};
    j["readout"] = {{"lambda", c.readout.lambda ? json(*c.readout.lambda) : json(nullptr)},
                    {"lambda_grid", c.readout.lambda_grid},
                    {"validation_fraction", c.readout.validation_fraction},
                    {"washout", c.readout.washout ? json(*c.readout.washout) : json(nullptr)},
                    {"nmse_normalization",
                     c.readout.normalization == NmseNormalization::truth_power ? "truth" : "output"}};
    j["timing"] = {{"t_bin_ps", c.timing.t_bin / kPs},
                   {"t_osc_ps", c.timing.t_osc / kPs},
                   {"waveform_dt_ps", c.timing.waveform_dt / kPs},
                   {"taps_per_bin", c.timing.taps_per_bin}};
    j["sweep"] = {{"t_axis_ps", to_ps(c.sweep.t_axis)}, {"decay_axis_ps", to_ps(c.sweep.decay_axis)}};
    j["ablation"] = {{"sizes", c.ablation.sizes}, {"n_seeds", c.ablation.n_seeds}};
    j["seeds"] = {{"cavity", c.seeds.cavity},
                  {"ensemble", c.seeds.ensemble},
                  {"task", c.seeds.task},
                  {"ablation", c.seeds.ablation}};
    j["output_dir"] = c.output_dir.string();
    j["write_features"] = c.write_features;
    return j.dump();
}

std::string config_hash(const ExperimentConfig& c)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_json(c)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace wavecav
