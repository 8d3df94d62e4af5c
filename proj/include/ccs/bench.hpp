#pragma once

// Wall-time scaling of conditional CS against conditional MMD.

#include "ccs/dataset.hpp"
#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace ccs {

struct BenchConfig {
    std::vector<Index> sizes{250, 500, 1000, 2000};
    std::vector<Index> dims{5};
    int repeats = 3;
    bool include_cmmd = true;
    std::uint64_t seed = 0;
};

struct BenchRow {
    std::string measure;
    Index n = 0;
    Index dim = 0;
    /// Fastest of the repeats.
    double seconds = 0.0;
    double value = 0.0;
};

namespace detail {

inline PairedDataset bench_data(Index n, Index dim, Rng& rng)
{
    Samples x(n, dim);
    Samples y(n, 1);
    for (Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Index j = 0; j < dim; ++j) {
            x(i, j) = standard_normal(rng);
            acc += x(i, j);
        }
        y(i, 0) = acc / std::sqrt(static_cast<double>(dim)) + standard_normal(rng);
    }
    return {std::move(x), std::move(y)};
}

template <class F>
BenchRow time_min(const std::string& measure, Index n, Index dim, int repeats, F&& f)
{
    BenchRow row{measure, n, dim, std::numeric_limits<double>::infinity(), 0.0};
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        row.value = f();
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        row.seconds = std::min(row.seconds, dt.count());
    }
    return row;
}

} // namespace detail

/// Times both estimators on two independent samples of size n per setting.
inline std::vector<BenchRow> run_bench(const BenchConfig& cfg)
{
    detail::require(!cfg.sizes.empty() && !cfg.dims.empty(), "bench: sizes and dims must be non-empty");
    detail::require(cfg.repeats >= 1, "bench: repeats must be positive");
    std::vector<BenchRow> rows;
    for (Index dim : cfg.dims) {
        detail::require(dim >= 1, "bench: dimensions must be positive");
        for (Index n : cfg.sizes) {
            detail::require(n >= 2, "bench: sizes must be at least 2");
            Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(n * 1000 + dim), 71));
            const PairedDataset s = detail::bench_data(n, dim, rng);
            const PairedDataset t = detail::bench_data(n, dim, rng);
            rows.push_back(detail::time_min("cond-cs", n, dim, cfg.repeats,
                                            [&] { return conditional_cs(s, t, 1.0, 1.0); }));
            if (cfg.include_cmmd) {
                rows.push_back(detail::time_min("cond-mmd", n, dim, cfg.repeats, [&] {
                    return conditional_mmd(s, t, CmmdConfig{1e-3, 1.0, 1.0});
                }));
            }
        }
    }
    return rows;
}

/// Least-squares slope of log(seconds) on log(n) for one measure and dimension.
inline double scaling_exponent(const std::vector<BenchRow>& rows, const std::string& measure, Index dim)
{
    std::vector<double> lx;
    std::vector<double> ly;
    for (const BenchRow& r : rows) {
        if (r.measure == measure && r.dim == dim) {
            lx.push_back(std::log(static_cast<double>(r.n)));
            ly.push_back(std::log(std::max(r.seconds, 1e-12)));
        }
    }
    detail::require(lx.size() >= 2, "scaling_exponent: need at least two sizes");
    const auto m = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i] / m;
        my += ly[i] / m;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    detail::require(sxx > 0.0, "scaling_exponent: sizes must differ");
    return sxy / sxx;
}

} // namespace ccs
