#include "wavecav/cavity.hpp"

#include "wavecav/error.hpp"
#include "wavecav/rng.hpp"
#include "wavecav/tasks.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace wavecav {

using std::numbers::pi;

void CavityConfig::validate() const
{
    require(area > 0.0, "cavity: area must be positive", Errc::config_invalid);
    require(bandwidth > 0.0, "cavity: bandwidth must be positive", Errc::config_invalid);
    require(f0 - bandwidth / 2.0 > 0.0, "cavity: band must lie above 0 Hz", Errc::config_invalid);
    require(t_decay > 0.0, "cavity: t_decay must be positive", Errc::config_invalid);
    require(n_ports >= 1, "cavity: at least one port required", Errc::config_invalid);
    require(mode_density_scale >= 0.0, "cavity: mode_density_scale must be >= 0",
            Errc::config_invalid);
}

void DiodeParams::validate() const
{
    require(reverse_slope >= 0.0 && reverse_slope < 1.0, "diode: reverse slope must lie in [0, 1)");
    require(knee > 0.0, "diode: knee must be positive");
    require(std::isfinite(threshold), "diode: threshold must be finite");
}

namespace {

double softplus(double x)
{
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

}  // namespace

double diode(double v, const DiodeParams& p)
{
    const double scale = (1.0 - p.reverse_slope) * p.knee;
    const double offset = scale * softplus(-p.threshold / p.knee);
    return scale * softplus((v - p.threshold) / p.knee) + p.reverse_slope * v - offset;
}

double ModalReservoir::max_frequency_hz() const
{
    if (mode_freqs.empty()) return 0.0;
    return *std::max_element(mode_freqs.begin(), mode_freqs.end()) / (2.0 * pi);
}

void ModalReservoir::validate() const
{
    const auto k = mode_freqs.size();
    require(k >= 1, "reservoir: at least one mode required");
    require(damping > 0.0 && std::isfinite(damping), "reservoir: damping must be positive");
    require(input_couplings.size() == k, "reservoir: input coupling count differs from mode count");
    require(port_couplings.cols() == static_cast<Index>(k) && port_couplings.rows() >= 1,
            "reservoir: port coupling matrix must be N0 x K");
    require(port_couplings.allFinite(), "reservoir: non-finite port coupling");
    for (double w : mode_freqs)
        require(std::isfinite(w) && w > damping,
                "reservoir: every mode must be underdamped (omega > gamma)");
    for (double b : input_couplings) require(std::isfinite(b), "reservoir: non-finite input coupling");
    require(std::isfinite(port_gain), "reservoir: non-finite port gain");
    diode.validate();
}

Index weyl_mode_count(const CavityConfig& c)
{
    const double n = c.mode_density_scale * 2.0 * pi * c.area * c.f0 * c.bandwidth /
                     (kSpeedOfLight * kSpeedOfLight);
    return static_cast<Index>(std::llround(n));
}

ModalReservoir build_cavity(const CavityConfig& config, std::uint64_t seed)
{
    config.validate();
    const Index k = weyl_mode_count(config);
    if (k < 10)
        throw Error(Errc::band_too_narrow, "build_cavity: band holds " + std::to_string(k) +
                                               " modes (< 10); widen the band or the cavity");

    ModalReservoir r;
    r.seed = seed;
    r.damping = 1.0 / config.t_decay;
    const double f_lo = config.f0 - config.bandwidth / 2.0;
    const double f_hi = config.f0 + config.bandwidth / 2.0;
    r.band_lo = 2.0 * pi * f_lo;
    r.band_hi = 2.0 * pi * f_hi;

    // Wigner surmise P(s) = (pi/2) s exp(-pi s^2 / 4), sampled by inverse CDF.
    auto spacing_rng = make_rng(seed, 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> cumulative(static_cast<std::size_t>(k + 1));
    double total = 0.0;
    for (auto& c : cumulative) {
        total += std::sqrt(-4.0 * std::log1p(-unit(spacing_rng)) / pi);
        c = total;
    }
    r.mode_freqs.resize(static_cast<std::size_t>(k));
    for (Index i = 0; i < k; ++i) {
        // Unfolded staircase position in (0, 1), mapped through the Weyl count N(f) ~ f^2.
        const double x = cumulative[static_cast<std::size_t>(i)] / total;
        const double f = std::sqrt(f_lo * f_lo + x * (f_hi * f_hi - f_lo * f_lo));
        r.mode_freqs[static_cast<std::size_t>(i)] = 2.0 * pi * f;
    }

    auto coupling_rng = make_rng(seed, 2);
    std::normal_distribution<double> normal(0.0, 1.0);
    r.input_couplings.resize(static_cast<std::size_t>(k));
    for (auto& b : r.input_couplings) b = normal(coupling_rng);

    auto port_rng = make_rng(seed, 3);
    r.port_couplings.resize(config.n_ports, k);
    for (Index p = 0; p < config.n_ports; ++p) {
        for (Index j = 0; j < k; ++j) r.port_couplings(p, j) = normal(port_rng);
        r.port_couplings.row(p).normalize();
    }
    r.validate();
    return r;
}

ModeStep mode_step(double omega, double gamma, double coupling, double h)
{
    const double wd = std::sqrt(omega * omega - gamma * gamma);
    const double decay = std::exp(-gamma * h);
    const double c = std::cos(wd * h);
    const double s = std::sin(wd * h);
    ModeStep m;
    m.p00 = decay * (c + gamma / wd * s);
    m.p01 = decay * s / wd;
    m.p10 = -decay * omega * omega / wd * s;
    m.p11 = decay * (c - gamma / wd * s);
    // Constant forcing u has fixed point (coupling * u / omega^2, 0); the step relaxes
    // toward it: x_{n+1} - x* = phi (x_n - x*).
    const double a_star = coupling / (omega * omega);
    m.g0 = (1.0 - m.p00) * a_star;
    m.g1 = -m.p10 * a_star;
    return m;
}

namespace {

void check_drive(const ModalReservoir& r, const TimeSeries& drive)
{
    r.validate();
    require(drive.channels() == 1, "simulate: drive must have exactly one channel");
    drive.validate();
    const double f_max = r.max_frequency_hz();
    if (drive.dt > 1.0 / (20.0 * f_max) * (1.0 + 1e-12))
        throw Error(Errc::stability_precondition,
                    "simulate: drive dt " + std::to_string(drive.dt) + " s exceeds 1/(20 f_max) = " +
                        std::to_string(1.0 / (20.0 * f_max)) + " s");
}

}  // namespace

TimeSeries simulate_linear(const ModalReservoir& reservoir, const TimeSeries& drive, Execution exec,
                           const ModeState* initial, ModeState* final_state)
{
    check_drive(reservoir, drive);
    ModeState state = initial ? *initial : ModeState::zeros(reservoir.n_modes());
    require(static_cast<Index>(state.a.size()) == reservoir.n_modes() &&
                static_cast<Index>(state.adot.size()) == reservoir.n_modes(),
            "simulate: initial state size differs from mode count");
    Matrix ports;
    if (exec == Execution::serial)
        kernels::port_response_serial(reservoir, drive.channel(0), drive.dt, state, ports);
    else
        kernels::port_response_parallel(reservoir, drive.channel(0), drive.dt, state, ports);
    if (final_state) *final_state = std::move(state);

    std::vector<std::string> names;
    for (Index p = 0; p < reservoir.n_ports(); ++p) names.push_back("port" + std::to_string(p));
    return TimeSeries(std::move(ports), drive.dt, std::move(names));
}

void apply_diode(TimeSeries& ports, const DiodeParams& params)
{
    params.validate();
    ports.values = ports.values.unaryExpr([&](double v) { return diode(v, params); });
}

TimeSeries simulate(const ModalReservoir& reservoir, const TimeSeries& drive, Execution exec)
{
    auto out = simulate_linear(reservoir, drive, exec);
    apply_diode(out, reservoir.diode);
    return out;
}

double modal_energy(const ModalReservoir& reservoir, const ModeState& state)
{
    double e = 0.0;
    for (std::size_t k = 0; k < reservoir.mode_freqs.size(); ++k) {
        const double w = reservoir.mode_freqs[k];
        e += 0.5 * (state.adot[k] * state.adot[k] + w * w * state.a[k] * state.a[k]);
    }
    return e;
}

Matrix sample_ports(const TimeSeries& port_voltages, double t_bin, Index taps_per_bin, Index n_bins)
{
    require(taps_per_bin >= 1, "sample_ports: taps_per_bin must be >= 1");
    require(t_bin > 0.0, "sample_ports: t_bin must be positive");
    const double r = t_bin / port_voltages.dt;
    require(r >= 1.0, "sample_ports: bin shorter than the waveform sample period");
    require(r >= static_cast<double>(taps_per_bin) * (1.0 - 1e-12),
            "sample_ports: fewer waveform samples per bin than taps");
    const Index len = port_voltages.samples();
    if (n_bins < 0) n_bins = static_cast<Index>(std::floor(static_cast<double>(len) / r + 1e-9));
    const Index n_ports = port_voltages.channels();

    Matrix out(n_ports * taps_per_bin, n_bins);
    for (Index n = 0; n < n_bins; ++n) {
        for (Index j = 0; j < taps_per_bin; ++j) {
            const double pos = static_cast<double>(n) * r +
                               static_cast<double>(j + 1) * r / static_cast<double>(taps_per_bin);
            const Index idx = std::clamp<Index>(last_sample_before(pos), 0, len - 1);
            for (Index p = 0; p < n_ports; ++p) out(p * taps_per_bin + j, n) = port_voltages.values(p, idx);
        }
    }
    return out;
}

double echo_state_check(const ModalReservoir& reservoir, const TimeSeries& drive,
                        const ModeState& init_a, const ModeState& init_b)
{
    const double horizon = 20.0 / reservoir.damping;
    const auto needed = static_cast<Index>(std::ceil(horizon / drive.dt)) + 1;
    TimeSeries u = drive;
    if (u.samples() < needed) {
        Matrix padded = Matrix::Zero(1, needed);
        padded.leftCols(drive.samples()) = drive.values.leftCols(drive.samples());
        u.values = std::move(padded);
    } else {
        u.values = drive.values.leftCols(needed);
    }
    auto va = simulate_linear(reservoir, u, Execution::parallel, &init_a);
    auto vb = simulate_linear(reservoir, u, Execution::parallel, &init_b);

    const Index n = u.samples();
    std::vector<double> norm(static_cast<std::size_t>(n + 1));
    // Index 0 is the instant before the first step: the initial port-signal difference.
    {
        double s = 0.0;
        for (Index p = 0; p < reservoir.n_ports(); ++p) {
            double d = 0.0;
            for (Index k = 0; k < reservoir.n_modes(); ++k)
                d += reservoir.port_couplings(p, k) *
                     (init_a.adot[static_cast<std::size_t>(k)] - init_b.adot[static_cast<std::size_t>(k)]);
            d *= reservoir.port_gain;
            s += d * d;
        }
        norm[0] = std::sqrt(s);
    }
    for (Index t = 0; t < n; ++t) {
        double s = 0.0;
        for (Index p = 0; p < reservoir.n_ports(); ++p) {
            const double d = va.values(p, t) - vb.values(p, t);
            s += d * d;
        }
        norm[static_cast<std::size_t>(t + 1)] = std::sqrt(s);
    }

    const double slowest = *std::min_element(reservoir.mode_freqs.begin(), reservoir.mode_freqs.end());
    const auto window = std::min<Index>(n, static_cast<Index>(std::ceil(2.0 * pi / slowest / drive.dt)));
    const double reference = *std::max_element(norm.begin(), norm.begin() + window + 1);
    if (reference == 0.0) return 0.0;

    const double threshold = 1e-6 * reference;
    Index last_above = -1;
    for (Index t = n; t >= 0; --t) {
        if (norm[static_cast<std::size_t>(t)] >= threshold) {
            last_above = t;
            break;
        }
    }
    if (last_above >= n)
        throw Error(Errc::echo_state_violation,
                    "echo_state_check: port difference still above 1e-6 of its initial value after 20 "
                    "decay times");
    return static_cast<double>(last_above + 1) * drive.dt;
}

void calibrate_diode(ModalReservoir& reservoir, const TimeSeries& drive, const DiodeCalibration& cal)
{
    TimeSeries pilot = drive;
    if (drive.samples() > cal.pilot_samples) pilot.values = drive.values.leftCols(cal.pilot_samples);
    ModalReservoir unit = reservoir;
    unit.port_gain = 1.0;
    auto v = simulate_linear(unit, pilot);
    const double rms = std::sqrt(v.values.squaredNorm() / static_cast<double>(v.values.size()));
    require(rms > 0.0 && std::isfinite(rms), "calibrate_diode: pilot run produced no port signal");
    reservoir.port_gain = 1.0 / rms;
    reservoir.diode.reverse_slope = cal.reverse_slope;
    reservoir.diode.knee = cal.knee_fraction;
    reservoir.diode.threshold = cal.threshold_fraction;
    reservoir.diode.validate();
}

std::string reservoir_to_json(const ModalReservoir& r)
{
    nlohmann::json j;
    j["format"] = "wavecav.reservoir";
    j["version"] = 1;
    j["seed"] = r.seed;
    j["damping"] = r.damping;
    j["band_lo"] = r.band_lo;
    j["band_hi"] = r.band_hi;
    j["port_gain"] = r.port_gain;
    j["mode_freqs"] = r.mode_freqs;
    j["input_couplings"] = r.input_couplings;
    auto rows = nlohmann::json::array();
    for (Index p = 0; p < r.port_couplings.rows(); ++p) {
        std::vector<double> row(r.port_couplings.row(p).begin(), r.port_couplings.row(p).end());
        rows.push_back(row);
    }
    j["port_couplings"] = rows;
    j["diode"] = {{"reverse_slope", r.diode.reverse_slope},
                  {"knee", r.diode.knee},
                  {"threshold", r.diode.threshold}};
    return j.dump(1);
}

ModalReservoir reservoir_from_json(const std::string& text)
{
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "wavecav.reservoir")
            throw Error(Errc::parse_error, "reservoir file: wrong format tag");
        if (j.at("version").get<int>() != 1)
            throw Error(Errc::parse_error, "reservoir file: unsupported version");
        ModalReservoir r;
        r.seed = j.at("seed").get<std::uint64_t>();
        r.damping = j.at("damping").get<double>();
        r.band_lo = j.at("band_lo").get<double>();
        r.band_hi = j.at("band_hi").get<double>();
        r.port_gain = j.at("port_gain").get<double>();
        r.mode_freqs = j.at("mode_freqs").get<std::vector<double>>();
        r.input_couplings = j.at("input_couplings").get<std::vector<double>>();
        const auto& rows = j.at("port_couplings");
        r.port_couplings.resize(static_cast<Index>(rows.size()), static_cast<Index>(r.mode_freqs.size()));
        for (std::size_t p = 0; p < rows.size(); ++p) {
            auto row = rows[p].get<std::vector<double>>();
            require(row.size() == r.mode_freqs.size(), "reservoir file: coupling row length mismatch",
                    Errc::parse_error);
            for (std::size_t k = 0; k < row.size(); ++k)
                r.port_couplings(static_cast<Index>(p), static_cast<Index>(k)) = row[k];
        }
        const auto& d = j.at("diode");
        r.diode = {d.at("reverse_slope").get<double>(), d.at("knee").get<double>(),
                   d.at("threshold").get<double>()};
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::parse_error, std::string("reservoir file: ") + e.what());
    }
}

void save_reservoir(const std::filesystem::path& path, const ModalReservoir& r)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    f << reservoir_to_json(r) << '\n';
}

ModalReservoir load_reservoir(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return reservoir_from_json(ss.str());
}

}  // namespace wavecav
