#pragma once

#include "wavecav/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace wavecav {

/// Uniformly sampled multi-channel signal. Used both for task-step series
/// (dt dimensionless or task time) and for fast drive/port waveforms (dt in seconds).
struct TimeSeries {
    Matrix values;                   // channels x samples
    double dt = 1.0;
    std::vector<std::string> names;  // one per channel; may be empty

    TimeSeries() = default;
    TimeSeries(Matrix v, double dt_, std::vector<std::string> n = {});

    static TimeSeries scalar(std::span<const double> samples, double dt, std::string name = "x");

    Index channels() const { return values.rows(); }
    Index samples() const { return values.cols(); }
    double duration() const { return static_cast<double>(samples()) * dt; }

    std::span<const double> channel(Index c) const
    {
        return {values.data() + c * values.cols(), static_cast<std::size_t>(values.cols())};
    }
    std::span<double> channel(Index c)
    {
        return {values.data() + c * values.cols(), static_cast<std::size_t>(values.cols())};
    }
    std::vector<double> channel_vector(Index c) const
    {
        auto s = channel(c);
        return {s.begin(), s.end()};
    }

    std::string channel_name(Index c) const;

    /// Columns [range.begin, range.end) as a new series with the same dt and names.
    TimeSeries slice(ColumnRange range) const;

    /// Throws invalid_argument unless dt > 0, channels >= 1 and all values are finite.
    void validate() const;
};

/// Key/value pairs carried on the CSV metadata row (dt is always present).
using CsvMetadata = std::map<std::string, std::string>;

/// CSV layout: header row of channel names, metadata row `#dt=<dt>[;key=value...]`,
/// then one row per sample.
void write_csv(std::ostream& out, const TimeSeries& series, const CsvMetadata& extra = {});
void write_csv(const std::filesystem::path& path, const TimeSeries& series,
               const CsvMetadata& extra = {});
TimeSeries read_csv(std::istream& in, CsvMetadata* metadata = nullptr);
TimeSeries read_csv(const std::filesystem::path& path, CsvMetadata* metadata = nullptr);

}  // namespace wavecav
