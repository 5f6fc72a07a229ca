#include "wavecav/csv.hpp"

#include "wavecav/error.hpp"

#include <charconv>
#include <cmath>

namespace wavecav {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::integration_divergence: return "integration-divergence";
    case Errc::no_dominant_period: return "no-dominant-period";
    case Errc::orbit_escape: return "orbit-escape";
    case Errc::narma_divergence: return "narma-divergence";
    case Errc::band_too_narrow: return "band-too-narrow";
    case Errc::stability_precondition: return "stability-precondition";
    case Errc::echo_state_violation: return "echo-state-violation";
    case Errc::rank_deficient: return "rank-deficient";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::undefined_normalization: return "undefined-normalization";
    case Errc::parse_error: return "parse-error";
    case Errc::config_invalid: return "config-invalid";
    case Errc::io_error: return "io-error";
    }
    return "unknown";
}

namespace csv {

std::string format_double(double v)
{
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) return "nan";
    return {buf, end};
}

std::vector<std::string> split(std::string_view line, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(trim(line.substr(start)));
            break;
        }
        out.emplace_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view text, std::size_t line_no)
{
    text = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": cannot parse '" +
                                           std::string(text) + "' as a number");
    return v;
}

}  // namespace csv
}  // namespace wavecav
