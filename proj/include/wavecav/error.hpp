#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wavecav {

enum class Errc {
    invalid_argument,
    integration_divergence,
    no_dominant_period,
    orbit_escape,
    narma_divergence,
    band_too_narrow,
    stability_precondition,
    echo_state_violation,
    rank_deficient,
    dimension_mismatch,
    undefined_normalization,
    parse_error,
    config_invalid,
    io_error,
};

std::string_view errc_name(Errc code) noexcept;

/// Library error. Every failure mode named by the module contracts maps to one Errc.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Throws invalid_argument unless `cond` holds.
inline void require(bool cond, const std::string& what, Errc code = Errc::invalid_argument)
{
    if (!cond) throw Error(code, what);
}

}  // namespace wavecav
