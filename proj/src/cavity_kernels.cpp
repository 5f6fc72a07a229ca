#include "wavecav/cavity.hpp"

#include <omp.h>

#include <algorithm>
#include <vector>

namespace wavecav::kernels {

namespace {

std::vector<ModeStep> precompute_steps(const ModalReservoir& r, double dt)
{
    std::vector<ModeStep> steps(r.mode_freqs.size());
    for (std::size_t k = 0; k < steps.size(); ++k)
        steps[k] = mode_step(r.mode_freqs[k], r.damping, r.input_couplings[k], dt);
    return steps;
}

}  // namespace

void port_response_serial(const ModalReservoir& r, std::span<const double> drive, double dt,
                          ModeState& state, Matrix& ports)
{
    const auto steps = precompute_steps(r, dt);
    const Index n_modes = r.n_modes();
    const Index n_ports = r.n_ports();
    const auto n = static_cast<Index>(drive.size());
    ports.resize(n_ports, n);

    std::vector<double> acc(static_cast<std::size_t>(n_ports));
    for (Index t = 0; t < n; ++t) {
        const double u = drive[static_cast<std::size_t>(t)];
        std::fill(acc.begin(), acc.end(), 0.0);
        for (Index k = 0; k < n_modes; ++k) {
            const auto& s = steps[static_cast<std::size_t>(k)];
            double& a = state.a[static_cast<std::size_t>(k)];
            double& v = state.adot[static_cast<std::size_t>(k)];
            const double a_next = s.p00 * a + s.p01 * v + s.g0 * u;
            const double v_next = s.p10 * a + s.p11 * v + s.g1 * u;
            a = a_next;
            v = v_next;
            for (Index p = 0; p < n_ports; ++p) acc[static_cast<std::size_t>(p)] += r.port_couplings(p, k) * v;
        }
        for (Index p = 0; p < n_ports; ++p) ports(p, t) = r.port_gain * acc[static_cast<std::size_t>(p)];
    }
}

void port_response_parallel(const ModalReservoir& r, std::span<const double> drive, double dt,
                            ModeState& state, Matrix& ports)
{
    constexpr Index kBlock = 2048;
    const auto steps = precompute_steps(r, dt);
    const Index n_modes = r.n_modes();
    const Index n_ports = r.n_ports();
    const auto n = static_cast<Index>(drive.size());
    ports.resize(n_ports, n);

    // velocity[k * kBlock + j] = a_k' after step t0 + j
    std::vector<double> velocity(static_cast<std::size_t>(n_modes * kBlock));

    for (Index t0 = 0; t0 < n; t0 += kBlock) {
        const Index len = std::min(kBlock, n - t0);

#pragma omp parallel for schedule(static)
        for (Index k = 0; k < n_modes; ++k) {
            const auto& s = steps[static_cast<std::size_t>(k)];
            double a = state.a[static_cast<std::size_t>(k)];
            double v = state.adot[static_cast<std::size_t>(k)];
            double* out = velocity.data() + k * kBlock;
            for (Index j = 0; j < len; ++j) {
                const double u = drive[static_cast<std::size_t>(t0 + j)];
                const double a_next = s.p00 * a + s.p01 * v + s.g0 * u;
                const double v_next = s.p10 * a + s.p11 * v + s.g1 * u;
                a = a_next;
                v = v_next;
                out[j] = v;
            }
            state.a[static_cast<std::size_t>(k)] = a;
            state.adot[static_cast<std::size_t>(k)] = v;
        }

#pragma omp parallel for schedule(static)
        for (Index j = 0; j < len; ++j) {
            for (Index p = 0; p < n_ports; ++p) {
                double acc = 0.0;
                for (Index k = 0; k < n_modes; ++k) acc += r.port_couplings(p, k) * velocity[static_cast<std::size_t>(k * kBlock + j)];
                ports(p, t0 + j) = r.port_gain * acc;
            }
        }
    }
}

}  // namespace wavecav::kernels
