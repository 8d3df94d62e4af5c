#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace ccs {

/// Row-major sample matrix: one observation per row.
using Samples = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline std::span<const double> row_span(const Samples& s, Index i)
{
    return {s.data() + i * s.cols(), static_cast<std::size_t>(s.cols())};
}

/// Copy the listed rows of `s` into a new matrix, in order.
inline Samples take_rows(const Samples& s, std::span<const Index> rows)
{
    Samples out(static_cast<Index>(rows.size()), s.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.row(static_cast<Index>(r)) = s.row(rows[r]);
    }
    return out;
}

/// Horizontal concatenation [a b]; row counts must match.
inline Samples hconcat(const Samples& a, const Samples& b)
{
    Samples out(a.rows(), a.cols() + b.cols());
    out << a, b;
    return out;
}

/// Vertical concatenation; column counts must match.
inline Samples vconcat(const Samples& a, const Samples& b)
{
    Samples out(a.rows() + b.rows(), a.cols());
    out << a, b;
    return out;
}

inline Samples column(std::span<const double> values)
{
    Samples out(static_cast<Index>(values.size()), 1);
    for (std::size_t i = 0; i < values.size(); ++i) {
        out(static_cast<Index>(i), 0) = values[i];
    }
    return out;
}

} // namespace ccs
