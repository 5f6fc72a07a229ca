#include "wavecav/time_series.hpp"

#include "wavecav/csv.hpp"
#include "wavecav/error.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace wavecav {

TimeSeries::TimeSeries(Matrix v, double dt_, std::vector<std::string> n)
    : values(std::move(v)), dt(dt_), names(std::move(n))
{
}

TimeSeries TimeSeries::scalar(std::span<const double> samples, double dt, std::string name)
{
    Matrix v(1, static_cast<Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) v(0, static_cast<Index>(i)) = samples[i];
    return TimeSeries(std::move(v), dt, {std::move(name)});
}

std::string TimeSeries::channel_name(Index c) const
{
    if (c < static_cast<Index>(names.size()) && !names[static_cast<std::size_t>(c)].empty())
        return names[static_cast<std::size_t>(c)];
    return "ch" + std::to_string(c);
}

TimeSeries TimeSeries::slice(ColumnRange range) const
{
    require(range.begin >= 0 && range.end <= samples() && range.begin <= range.end,
            "TimeSeries::slice: range [" + std::to_string(range.begin) + ", " +
                std::to_string(range.end) + ") outside " + std::to_string(samples()) + " samples");
    return TimeSeries(values.middleCols(range.begin, range.size()), dt, names);
}

void TimeSeries::validate() const
{
    require(dt > 0.0 && std::isfinite(dt), "TimeSeries: dt must be positive and finite");
    require(channels() >= 1, "TimeSeries: at least one channel required");
    require(values.allFinite(), "TimeSeries: non-finite sample value");
}

void write_csv(std::ostream& out, const TimeSeries& series, const CsvMetadata& extra)
{
    for (Index c = 0; c < series.channels(); ++c) {
        if (c) out << ',';
        out << series.channel_name(c);
    }
    out << "\n#dt=" << csv::format_double(series.dt);
    for (const auto& [k, v] : extra) {
        if (k == "dt") continue;
        out << ';' << k << '=' << v;
    }
    out << '\n';
    for (Index i = 0; i < series.samples(); ++i) {
        for (Index c = 0; c < series.channels(); ++c) {
            if (c) out << ',';
            out << csv::format_double(series.values(c, i));
        }
        out << '\n';
    }
}

void write_csv(const std::filesystem::path& path, const TimeSeries& series, const CsvMetadata& extra)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    write_csv(f, series, extra);
}

TimeSeries read_csv(std::istream& in, CsvMetadata* metadata)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "line 1: missing header row");
    auto names = csv::split(line);
    if (!std::getline(in, line) || line.rfind("#", 0) != 0)
        throw Error(Errc::parse_error, "line 2: missing '#dt=' metadata row");

    CsvMetadata meta;
    for (const auto& item : csv::split(std::string_view(line).substr(1), ';')) {
        auto eq = item.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::parse_error, "line 2: malformed metadata entry '" + item + "'");
        meta[item.substr(0, eq)] = item.substr(eq + 1);
    }
    if (!meta.count("dt")) throw Error(Errc::parse_error, "line 2: metadata row lacks dt");
    double dt = csv::parse_double(meta["dt"], 2);

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != names.size())
            throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(names.size()) + " fields, got " +
                                               std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(csv::parse_double(c, line_no));
        rows.push_back(std::move(row));
    }

    Matrix v(static_cast<Index>(names.size()), static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < names.size(); ++c)
            v(static_cast<Index>(c), static_cast<Index>(i)) = rows[i][c];
    TimeSeries ts(std::move(v), dt, std::move(names));
    ts.validate();
    if (metadata) *metadata = std::move(meta);
    return ts;
}

TimeSeries read_csv(const std::filesystem::path& path, CsvMetadata* metadata)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string());
    return read_csv(f, metadata);
}

}  // namespace wavecav
