#include "wavecav/feature_matrix.hpp"

#include "wavecav/csv.hpp"
#include "wavecav/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace wavecav {

std::string FeatureLabel::to_string() const
{
    return "b" + std::to_string(boundary) + ".f" + std::to_string(freq) + ".p" +
           std::to_string(port) + ".t" + std::to_string(tap);
}

FeatureLabel FeatureLabel::parse(const std::string& text, std::size_t line_no)
{
    auto parts = csv::split(text, '.');
    auto fail = [&] {
        return Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad feature label '" +
                                            text + "' (expected b<i>.f<j>.p<k>.t<l>)");
    };
    if (parts.size() != 4) throw fail();
    const char prefixes[4] = {'b', 'f', 'p', 't'};
    int vals[4];
    for (int i = 0; i < 4; ++i) {
        const auto& p = parts[static_cast<std::size_t>(i)];
        if (p.size() < 2 || p[0] != prefixes[i]) throw fail();
        auto [ptr, ec] = std::from_chars(p.data() + 1, p.data() + p.size(), vals[i]);
        if (ec != std::errc{} || ptr != p.data() + p.size() || vals[i] < 0) throw fail();
    }
    return {vals[0], vals[1], vals[2], vals[3]};
}

void FeatureMatrix::validate() const
{
    require(values.rows() == n_features() + 1,
            "FeatureMatrix: " + std::to_string(values.rows()) + " rows for " +
                std::to_string(n_features()) + " labelled features (+1 bias expected)",
            Errc::dimension_mismatch);
    require(values.allFinite(), "FeatureMatrix: non-finite entry");
    require((values.row(values.rows() - 1).array() == 1.0).all(),
            "FeatureMatrix: last row must be the all-ones bias");
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& fm)
{
    fm.validate();
    for (const auto& l : fm.labels) out << l.to_string() << ',';
    out << "bias\n";
    for (Index t = 0; t < fm.cols(); ++t) {
        for (Index r = 0; r < fm.rows(); ++r) {
            if (r) out << ',';
            out << csv::format_double(fm.values(r, t));
        }
        out << '\n';
    }
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
    write_feature_csv(f, fm);
}

FeatureMatrix read_feature_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw Error(Errc::parse_error, "line 1: missing header");
    auto header = csv::split(line);
    if (header.empty() || header.back() != "bias")
        throw Error(Errc::parse_error, "line 1: header must end with the 'bias' column");
    FeatureMatrix fm;
    bool labelled = true;
    for (std::size_t i = 0; i + 1 < header.size(); ++i) {
        if (header[i] == "bias") throw Error(Errc::parse_error, "line 1: duplicate bias column");
        try {
            fm.labels.push_back(FeatureLabel::parse(header[i], 1));
        } catch (const Error&) {
            labelled = false;
        }
    }
    // Measured hardware channels come with arbitrary names: number them as ports.
    if (!labelled) {
        fm.labels.clear();
        for (std::size_t i = 0; i + 1 < header.size(); ++i) fm.labels.push_back({0, 0, static_cast<int>(i), 0});
    }

    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(line);
        if (cells.size() != header.size())
            throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                               std::to_string(header.size()) + " fields, got " +
                                               std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            double v = csv::parse_double(c, line_no);
            if (!std::isfinite(v))
                throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": non-finite value");
            row.push_back(v);
        }
        if (row.back() != 1.0)
            throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bias entry must be 1");
        rows.push_back(std::move(row));
    }
    fm.values.resize(static_cast<Index>(header.size()), static_cast<Index>(rows.size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t r = 0; r < header.size(); ++r)
            fm.values(static_cast<Index>(r), static_cast<Index>(t)) = rows[t][r];
    fm.validate();
    return fm;
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(Errc::io_error, "cannot open " + path.string());
    return read_feature_csv(f);
}

}  // namespace wavecav
