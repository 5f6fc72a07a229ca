#pragma once

#include <Eigen/Dense>

#include <cstdint>

namespace wavecav {

/// Row-major dense matrix. Rows are channels or features, columns are samples.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Selects the reference (serial) or OpenMP kernel. Both produce bit-identical results.
enum class Execution { serial, parallel };

/// Half-open column range [begin, end).
struct ColumnRange {
    Index begin = 0;
    Index end = 0;

    Index size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    friend bool operator==(const ColumnRange&, const ColumnRange&) = default;
};

}  // namespace wavecav
