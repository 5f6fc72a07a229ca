#include "wavecav/ret.hpp"

#include "wavecav/error.hpp"
#include "wavecav/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <random>
#include <set>

namespace wavecav {

using std::numbers::pi;

std::vector<double> EnsembleSpec::default_betas(Index n, double f0, double step)
{
    std::vector<double> b(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) b[static_cast<std::size_t>(k)] = f0 / (f0 + static_cast<double>(k) * step);
    return b;
}

std::vector<double> EnsembleSpec::resolved_betas(double f0) const
{
    return betas.empty() ? default_betas(n_freq, f0) : betas;
}

void EnsembleSpec::validate() const
{
    require(n_boundary >= 1, "ensemble: n_boundary must be >= 1", Errc::config_invalid);
    require(n_freq >= 1, "ensemble: n_freq must be >= 1", Errc::config_invalid);
    require(perturb_strength >= 0.0 && perturb_strength <= 1.0,
            "ensemble: perturb_strength must lie in [0, 1]", Errc::config_invalid);
    if (!betas.empty()) {
        require(static_cast<Index>(betas.size()) == n_freq, "ensemble: need one beta per n_freq",
                Errc::config_invalid);
        std::set<double> seen;
        for (double b : betas) {
            require(b > 0.0 && std::isfinite(b), "ensemble: every beta must be positive",
                    Errc::config_invalid);
            require(seen.insert(b).second, "ensemble: beta values must be distinct", Errc::config_invalid);
        }
    }
}

ModalReservoir boundary_perturb(const ModalReservoir& base, double strength, Index index,
                                std::uint64_t seed)
{
    require(strength >= 0.0 && strength <= 1.0, "boundary_perturb: strength must lie in [0, 1]");
    if (strength == 0.0) return base;

    const std::uint64_t member_seed = derive_seed(seed, static_cast<std::uint64_t>(index));
    ModalReservoir r = base;
    r.seed = member_seed;
    std::normal_distribution<double> normal(0.0, 1.0);

    const double width = base.band_hi - base.band_lo;
    const double spacing = width / static_cast<double>(base.n_modes());
    auto freq_rng = make_rng(member_seed, 1);
    for (auto& w : r.mode_freqs) {
        w += strength * spacing * normal(freq_rng);
        // Reflect at the band edges until inside.
        while (w < base.band_lo || w > base.band_hi) {
            if (w < base.band_lo) w = 2.0 * base.band_lo - w;
            if (w > base.band_hi) w = 2.0 * base.band_hi - w;
        }
    }

    const double theta = strength * pi / 2.0;
    const double c = std::cos(theta), s = std::sin(theta);
    auto coupling_rng = make_rng(member_seed, 2);
    for (auto& b : r.input_couplings) b = c * b + s * normal(coupling_rng);

    auto port_rng = make_rng(member_seed, 3);
    Eigen::RowVectorXd fresh(base.n_modes());
    for (Index p = 0; p < r.n_ports(); ++p) {
        for (Index k = 0; k < base.n_modes(); ++k) fresh(k) = normal(port_rng);
        fresh.normalize();
        r.port_couplings.row(p) = c * base.port_couplings.row(p) + s * fresh;
        r.port_couplings.row(p).normalize();
    }
    return r;
}

namespace {

constexpr int kSincZeros = 64;      // window half-width in zero crossings
constexpr double kKaiserShape = 14.0;
constexpr int kWindowTable = 8192;

const std::vector<double>& kaiser_table()
{
    static const std::vector<double> table = [] {
        std::vector<double> t(kWindowTable + 2);
        const double norm = std::cyl_bessel_i(0.0, kKaiserShape);
        for (int q = 0; q <= kWindowTable; ++q) {
            const double x = static_cast<double>(q) / kWindowTable;
            t[static_cast<std::size_t>(q)] = std::cyl_bessel_i(0.0, kKaiserShape * std::sqrt(std::max(0.0, 1.0 - x * x))) / norm;
        }
        t[kWindowTable + 1] = 0.0;
        return t;
    }();
    return table;
}

double kaiser(double x)  // x in [0, 1]
{
    const auto& t = kaiser_table();
    const double pos = x * kWindowTable;
    const auto q = static_cast<std::size_t>(pos);
    if (q >= kWindowTable) return q == kWindowTable ? t[kWindowTable] : 0.0;
    const double f = pos - static_cast<double>(q);
    return t[q] + f * (t[q + 1] - t[q]);
}

}  // namespace

TimeSeries frequency_stir(const TimeSeries& drive, double beta)
{
    require(beta > 0.0 && std::isfinite(beta), "frequency_stir: beta must be positive");
    drive.validate();
    if (beta == 1.0) return drive;

    const Index n_in = drive.samples();
    const auto n_out = static_cast<Index>(std::llround(static_cast<double>(n_in) * beta));
    const double fc = std::min(1.0, beta);
    const double half = kSincZeros / fc;  // window half-width, input samples
    const double step_angle = pi * fc;
    const double s_step = std::sin(step_angle), c_step = std::cos(step_angle);

    Matrix out = Matrix::Zero(drive.channels(), n_out);
    for (Index m = 0; m < n_out; ++m) {
        const double pos = static_cast<double>(m) / beta;
        const auto first = static_cast<Index>(std::ceil(pos - half));
        const auto last = static_cast<Index>(std::floor(pos + half));
        // sin(pi fc (j - pos)) advanced by angle addition across taps.
        double x = static_cast<double>(first) - pos;
        double sn = std::sin(step_angle * x), cs = std::cos(step_angle * x);
        for (Index j = first; j <= last; ++j, x += 1.0) {
            if (j >= 0 && j < n_in) {
                const double sinc = std::abs(x) < 1e-12 ? 1.0 : sn / (step_angle * x);
                const double w = fc * sinc * kaiser(std::abs(x) / half);
                for (Index ch = 0; ch < drive.channels(); ++ch) out(ch, m) += w * drive.values(ch, j);
            }
            const double sn_next = sn * c_step + cs * s_step;
            cs = cs * c_step - sn * s_step;
            sn = sn_next;
        }
    }
    return TimeSeries(std::move(out), drive.dt, drive.names);
}

std::vector<EnsembleMember> make_members(const ModalReservoir& base, const EnsembleSpec& spec)
{
    spec.validate();
    const double f0 = 0.5 * (base.band_lo + base.band_hi) / (2.0 * pi);
    const auto betas = spec.resolved_betas(f0);
    std::vector<EnsembleMember> members;
    members.reserve(static_cast<std::size_t>(spec.n_boundary * spec.n_freq));
    for (Index b = 0; b < spec.n_boundary; ++b) {
        ModalReservoir r = b == 0 ? base : boundary_perturb(base, spec.perturb_strength, b, spec.seed);
        for (Index f = 0; f < spec.n_freq; ++f)
            members.push_back({r, betas[static_cast<std::size_t>(f)], static_cast<int>(b), static_cast<int>(f)});
    }
    return members;
}

FeatureMatrix run_members(const std::vector<EnsembleMember>& members, const TimeSeries& drive,
                          double t_bin, Index taps_per_bin, Index n_bins, Execution exec)
{
    require(!members.empty(), "run_ensemble: no members");
    require(drive.channels() == 1, "run_ensemble: drive must have one channel");
    if (n_bins < 0) n_bins = static_cast<Index>(std::floor(drive.duration() / t_bin + 1e-9));

    // One stretched drive per distinct beta.
    std::vector<double> betas;
    for (const auto& m : members)
        if (std::find(betas.begin(), betas.end(), m.beta) == betas.end()) betas.push_back(m.beta);
    std::vector<TimeSeries> drives(betas.size());
    for (std::size_t i = 0; i < betas.size(); ++i) drives[i] = frequency_stir(drive, betas[i]);

    std::vector<Index> offsets(members.size() + 1, 0);
    for (std::size_t i = 0; i < members.size(); ++i)
        offsets[i + 1] = offsets[i] + members[i].reservoir.n_ports() * taps_per_bin;

    FeatureMatrix fm;
    fm.values.resize(offsets.back() + 1, n_bins);
    fm.values.row(offsets.back()).setOnes();
    fm.labels.resize(static_cast<std::size_t>(offsets.back()));

    std::vector<std::exception_ptr> errors(members.size());
    auto run_one = [&](std::size_t i) {
        const auto& m = members[i];
        try {
            const auto slot = static_cast<std::size_t>(std::find(betas.begin(), betas.end(), m.beta) - betas.begin());
            auto ports = simulate(m.reservoir, drives[slot], Execution::serial);
            fm.values.middleRows(offsets[i], offsets[i + 1] - offsets[i]) =
                sample_ports(ports, t_bin * m.beta, taps_per_bin, n_bins);
            for (Index p = 0; p < m.reservoir.n_ports(); ++p)
                for (Index t = 0; t < taps_per_bin; ++t)
                    fm.labels[static_cast<std::size_t>(offsets[i] + p * taps_per_bin + t)] = {
                        m.boundary_index, m.freq_index, static_cast<int>(p), static_cast<int>(t)};
        } catch (const Error& e) {
            errors[i] = std::make_exception_ptr(
                Error(e.code(), "member (boundary " + std::to_string(m.boundary_index) + ", freq " +
                                    std::to_string(m.freq_index) + "): " + e.what()));
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };

    if (exec == Execution::serial) {
        for (std::size_t i = 0; i < members.size(); ++i) run_one(i);
    } else {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::size_t i = 0; i < members.size(); ++i) run_one(i);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    fm.validate();
    return fm;
}

FeatureMatrix run_ensemble(const ModalReservoir& base, const EnsembleSpec& spec,
                           const TimeSeries& drive, double t_bin, Index taps_per_bin, Index n_bins,
                           Execution exec)
{
    return run_members(make_members(base, spec), drive, t_bin, taps_per_bin, n_bins, exec);
}

std::vector<Index> ablation_order(Index n_features, std::uint64_t seed)
{
    std::vector<Index> order(static_cast<std::size_t>(n_features));
    for (Index i = 0; i < n_features; ++i) order[static_cast<std::size_t>(i)] = i;
    auto rng = make_rng(seed, 0xab1a7e);
    for (Index i = n_features - 1; i > 0; --i) {
        std::uniform_int_distribution<Index> pick(0, i);
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
    }
    return order;
}

FeatureMatrix ablate(const FeatureMatrix& features, Index target_nr, std::uint64_t seed)
{
    features.validate();
    const Index n = features.n_features();
    require(target_nr >= 1 && target_nr <= n,
            "ablate: target size " + std::to_string(target_nr) + " outside [1, " + std::to_string(n) + "]");
    auto order = ablation_order(n, seed);
    std::vector<Index> keep(order.begin(), order.begin() + target_nr);
    std::sort(keep.begin(), keep.end());

    FeatureMatrix out;
    out.values.resize(target_nr + 1, features.cols());
    for (Index i = 0; i < target_nr; ++i) {
        out.values.row(i) = features.values.row(keep[static_cast<std::size_t>(i)]);
        out.labels.push_back(features.labels[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])]);
    }
    out.values.row(target_nr) = features.values.row(n);
    return out;
}

}  // namespace wavecav
