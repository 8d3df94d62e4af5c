#pragma once

// Gaussian kernel evaluation, Gram assembly and bandwidth selection.
//
// The kernel is exp(-|u - v|^2 / (2 width^2)) without the (sqrt(2 pi) width)^-d
// normalization. Every estimator in this library is a ratio or log-ratio in
// which that constant cancels, and dropping it keeps high-dimensional Gram
// entries away from underflow.

#include "ccs/error.hpp"
#include "ccs/types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ccs {

enum class BandwidthMode { fixed, median_heuristic };

struct KernelConfig {
    double width = 1.0;
    BandwidthMode mode = BandwidthMode::fixed;
};

inline double squared_distance(std::span<const double> u, std::span<const double> v)
{
    double acc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double diff = u[k] - v[k];
        acc += diff * diff;
    }
    return acc;
}

inline double gaussian_kernel(std::span<const double> u, std::span<const double> v, double width)
{
    detail::require(u.size() == v.size(), "gaussian_kernel: dimension mismatch");
    detail::require(width > 0.0, "gaussian_kernel: width must be positive");
    return std::exp(-squared_distance(u, v) / (2.0 * width * width));
}

/// Normalization constant of the density-normalized Gaussian in `dim`
/// dimensions. Only used to check that estimators are invariant to it.
inline double gaussian_normalizer(double width, Index dim)
{
    return std::pow(std::sqrt(2.0 * std::numbers::pi) * width, -static_cast<double>(dim));
}

/// Gram matrix G(i, j) = k(A_i, B_j).
inline Matrix gram(const Samples& a, const Samples& b, double width)
{
    detail::require(a.rows() > 0 && b.rows() > 0, "gram: empty sample set");
    detail::require(a.cols() == b.cols(), "gram: column dimension mismatch");
    detail::require(width > 0.0, "gram: width must be positive");
    const double scale = -1.0 / (2.0 * width * width);
    Matrix g(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        const auto ai = row_span(a, i);
        for (Index j = 0; j < b.rows(); ++j) {
            g(i, j) = std::exp(scale * squared_distance(ai, row_span(b, j)));
        }
    }
    return g;
}

/// Symmetric Gram of a set against itself; exact unit diagonal and exact symmetry.
inline Matrix gram(const Samples& a, double width)
{
    detail::require(a.rows() > 0, "gram: empty sample set");
    detail::require(width > 0.0, "gram: width must be positive");
    const double scale = -1.0 / (2.0 * width * width);
    const Index n = a.rows();
    Matrix g(n, n);
    for (Index i = 0; i < n; ++i) {
        g(i, i) = 1.0;
        const auto ai = row_span(a, i);
        for (Index j = i + 1; j < n; ++j) {
            const double v = std::exp(scale * squared_distance(ai, row_span(a, j)));
            g(i, j) = v;
            g(j, i) = v;
        }
    }
    return g;
}

/// Product-kernel Gram with one width per coordinate.
inline Matrix gram(const Samples& a, const Samples& b, const Vector& widths)
{
    detail::require(widths.size() == a.cols(), "gram: one width per coordinate required");
    detail::require((widths.array() > 0.0).all(), "gram: widths must be positive");
    Samples as = a * widths.cwiseInverse().asDiagonal();
    Samples bs = b * widths.cwiseInverse().asDiagonal();
    return gram(as, bs, 1.0);
}

inline double median_of(std::vector<double>& values)
{
    const auto n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    const double upper = *mid;
    if (n % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(), mid);
    return 0.5 * (lower + upper);
}

/// Median of all nonzero pairwise Euclidean distances.
inline double median_bandwidth(const Samples& pooled)
{
    detail::require(pooled.rows() >= 2, "median_bandwidth: need at least two samples");
    std::vector<double> distances;
    distances.reserve(static_cast<std::size_t>(pooled.rows() * (pooled.rows() - 1) / 2));
    for (Index i = 0; i < pooled.rows(); ++i) {
        for (Index j = i + 1; j < pooled.rows(); ++j) {
            const double d2 = squared_distance(row_span(pooled, i), row_span(pooled, j));
            if (d2 > 0.0) {
                distances.push_back(std::sqrt(d2));
            }
        }
    }
    detail::require(!distances.empty(), "median_bandwidth: all samples are identical");
    return median_of(distances);
}

/// Median heuristic on a uniformly strided subset of rows when the pool is large.
inline double median_bandwidth(const Samples& pooled, Index max_rows)
{
    if (pooled.rows() <= max_rows) {
        return median_bandwidth(pooled);
    }
    std::vector<Index> rows;
    const double stride = static_cast<double>(pooled.rows()) / static_cast<double>(max_rows);
    for (Index r = 0; r < max_rows; ++r) {
        rows.push_back(static_cast<Index>(static_cast<double>(r) * stride));
    }
    return median_bandwidth(take_rows(pooled, rows));
}

inline double resolve_width(const KernelConfig& config, const Samples& pooled)
{
    if (config.mode == BandwidthMode::median_heuristic) {
        return median_bandwidth(pooled);
    }
    detail::require(config.width > 0.0, "kernel width must be positive");
    return config.width;
}

/// Evaluates the joint kernel on concatenated [x; y] vectors and the product of
/// the two marginal kernels. Both values agree for the Gaussian kernel.
inline std::pair<double, double> product_kernel_check(std::span<const double> xi, std::span<const double> xj,
                                                      std::span<const double> yi, std::span<const double> yj,
                                                      double width)
{
    detail::require(xi.size() == xj.size() && yi.size() == yj.size(), "product_kernel_check: dimension mismatch");
    std::vector<double> zi(xi.begin(), xi.end());
    zi.insert(zi.end(), yi.begin(), yi.end());
    std::vector<double> zj(xj.begin(), xj.end());
    zj.insert(zj.end(), yj.begin(), yj.end());
    const double joint = gaussian_kernel(zi, zj, width);
    const double product = gaussian_kernel(xi, xj, width) * gaussian_kernel(yi, yj, width);
    return {joint, product};
}

} // namespace ccs
