#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace wavecav::csv {

/// Shortest round-trip decimal representation; byte-stable for a given value.
std::string format_double(double v);

std::vector<std::string> split(std::string_view line, char sep = ',');

/// Parses a full-string double; throws parse_error naming `line_no` on failure.
double parse_double(std::string_view text, std::size_t line_no);

std::string_view trim(std::string_view s);

}  // namespace wavecav::csv
