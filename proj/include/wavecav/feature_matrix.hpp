#pragma once

#include "wavecav/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace wavecav {

/// Origin of one feature row inside a reservoir ensemble.
struct FeatureLabel {
    int boundary = 0;
    int freq = 0;
    int port = 0;
    int tap = 0;

    std::string to_string() const;  // "b<i>.f<j>.p<k>.t<l>"
    static FeatureLabel parse(const std::string& text, std::size_t line_no);
    friend bool operator==(const FeatureLabel&, const FeatureLabel&) = default;
};

/// (N_r + 1) x T matrix of port samples; the last row is the constant bias.
struct FeatureMatrix {
    Matrix values;
    std::vector<FeatureLabel> labels;  // one per non-bias row

    Index n_features() const { return static_cast<Index>(labels.size()); }
    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }

    /// Throws unless rows == labels + 1, the bias row is all ones and entries are finite.
    void validate() const;
};

/// CSV interchange: header of feature labels followed by `bias`, one row per task step.
/// Headers that are not all b.f.p.t labels (measured channels) are numbered as ports of one member.
void write_feature_csv(std::ostream& out, const FeatureMatrix& fm);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& fm);
FeatureMatrix read_feature_csv(std::istream& in);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

}  // namespace wavecav
