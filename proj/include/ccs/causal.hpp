#pragma once

// Bivariate causal direction from nested conditional CS divergences, with a
// time-shifted surrogate test and the coupled Henon / NLVAR3 benchmarks.

#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/kernels.hpp"
#include "ccs/random.hpp"
#include "ccs/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccs {

using Series = std::vector<double>;

struct EmbeddingSpec {
    int delay = 1;
    int dim_x = 1;
    int dim_y = 1;

    EmbeddingSpec swapped() const { return {delay, dim_y, dim_x}; }
};

enum class Direction { x_causes_y, y_causes_x, none };

inline std::string_view direction_name(Direction d)
{
    switch (d) {
    case Direction::x_causes_y: return "x_causes_y";
    case Direction::y_causes_x: return "y_causes_x";
    case Direction::none: return "none";
    }
    return "none";
}

struct CausalResult {
    double score = 0.0;
    double p_value = 1.0;
    Direction direction = Direction::none;
};

struct DelayEmbedding {
    /// Row r holds [x_t, x_{t-delay}, ..., x_{t-(m-1)delay}] for t = first + r.
    Samples past;
    /// x_{t+1} for the same rows.
    Samples future;
};

/// Reconstructed past and one-step future over t = first .. L-2, where
/// `first` defaults to the smallest admissible (m-1) * delay.
inline DelayEmbedding delay_embed(std::span<const double> series, int m, int delay, std::optional<Index> first = {})
{
    detail::require(m >= 1 && delay >= 1, "delay_embed: dimension and delay must be positive");
    const auto len = static_cast<Index>(series.size());
    const Index span_back = static_cast<Index>(m - 1) * delay;
    const Index start = first.value_or(span_back);
    detail::require(start >= span_back, "delay_embed: first row lacks enough history");
    if (len < start + 2) {
        throw InvalidArgument("delay_embed: series of length " + std::to_string(len) +
                              " too short for embedding dimension " + std::to_string(m) + " and delay " +
                              std::to_string(delay));
    }
    const Index rows = len - 1 - start;
    DelayEmbedding out{Samples(rows, m), Samples(rows, 1)};
    for (Index r = 0; r < rows; ++r) {
        const Index t = start + r;
        for (int k = 0; k < m; ++k) {
            out.past(r, k) = series[static_cast<std::size_t>(t - static_cast<Index>(k) * delay)];
        }
        out.future(r, 0) = series[static_cast<std::size_t>(t + 1)];
    }
    return out;
}

/// Kernel widths for the four blocks of a causal score. Unset entries are
/// resolved by the median heuristic on that block.
struct CausalWidths {
    std::optional<double> x_past;
    std::optional<double> y_past;
    std::optional<double> x_future;
    std::optional<double> y_future;

    CausalWidths swapped() const { return {y_past, x_past, y_future, x_future}; }
};

/// C_{x->y} = D(p(y'|y_past); p(y'|y_past, x_past)) - D(p(x'|x_past); p(x'|x_past, y_past)).
/// Swapping (x, y) together with the spec and widths negates the score exactly.
inline double causal_score(std::span<const double> x, std::span<const double> y, const EmbeddingSpec& spec,
                           const CausalWidths& widths = {})
{
    detail::require(x.size() == y.size(), "causal_score: series lengths differ");
    const Index first = static_cast<Index>(std::max(spec.dim_x, spec.dim_y) - 1) * spec.delay;
    const DelayEmbedding ex = delay_embed(x, spec.dim_x, spec.delay, first);
    const DelayEmbedding ey = delay_embed(y, spec.dim_y, spec.delay, first);
    const auto resolve = [](const std::optional<double>& w, const Samples& block) {
        return w.has_value() ? *w : median_bandwidth(block, 1000);
    };
    const Matrix kx = gram(ex.past, resolve(widths.x_past, ex.past));
    const Matrix ky = gram(ey.past, resolve(widths.y_past, ey.past));
    const Matrix lx = gram(ex.future, resolve(widths.x_future, ex.future));
    const Matrix ly = gram(ey.future, resolve(widths.y_future, ey.future));
    return conditional_cs_nested(ky, kx, ly) - conditional_cs_nested(kx, ky, lx);
}

struct SurrogatePair {
    Series x;
    Series y;
    Index x_offset = 0;
    Index y_offset = 0;
};

/// Windows x[i, i+T) and y[j, j+T) with |i - j| >= min_offset, offsets drawn
/// uniformly among the admissible pairs.
inline SurrogatePair surrogate_pair(std::span<const double> x, std::span<const double> y, Index window,
                                    Index min_offset, Rng& rng)
{
    detail::require(x.size() == y.size(), "surrogate_pair: series lengths differ");
    detail::require(window >= 2, "surrogate_pair: window must hold at least two samples");
    detail::require(min_offset >= 1, "surrogate_pair: minimum offset must be positive");
    const auto len = static_cast<Index>(x.size());
    if (len < window + min_offset) {
        throw InvalidArgument("surrogate_pair: source of length " + std::to_string(len) +
                              " too short for window " + std::to_string(window) + " with offset " +
                              std::to_string(min_offset));
    }
    const auto starts = static_cast<std::size_t>(len - window + 1);
    Index i = 0;
    Index j = 0;
    do {
        i = static_cast<Index>(uniform_index(rng, starts));
        j = static_cast<Index>(uniform_index(rng, starts));
    } while (std::abs(i - j) < min_offset);
    SurrogatePair out;
    out.x.assign(x.begin() + i, x.begin() + i + window);
    out.y.assign(y.begin() + j, y.begin() + j + window);
    out.x_offset = i;
    out.y_offset = j;
    return out;
}

struct CausalTestConfig {
    EmbeddingSpec spec;
    /// Explicit widths; unset blocks use width_scale times the median
    /// heuristic on the whole source series, shared by every surrogate.
    CausalWidths widths;
    double width_scale = 0.5;
    /// Length T of the analysed window; 0 uses length - min_offset.
    Index window = 0;
    Index min_offset = 512;
    int surrogates = 100;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

/// Fills unset widths from the full series.
inline CausalWidths resolve_causal_widths(std::span<const double> x, std::span<const double> y,
                                          const EmbeddingSpec& spec, const CausalWidths& given, double scale)
{
    detail::require(scale > 0.0, "causal widths: scale must be positive");
    CausalWidths w = given;
    const auto fill = [&](std::optional<double>& slot, std::span<const double> s, int m, bool future) {
        if (!slot) {
            const DelayEmbedding e = delay_embed(s, m, spec.delay);
            slot = scale * median_bandwidth(future ? e.future : e.past, 1000);
        }
    };
    fill(w.x_past, x, spec.dim_x, false);
    fill(w.y_past, y, spec.dim_y, false);
    fill(w.x_future, x, 1, true);
    fill(w.y_future, y, 1, true);
    return w;
}

/// Scores the first T samples and ranks the score within the surrogate
/// distribution from both tails. Surrogate scores need not centre on zero,
/// so the rank rather than |score| decides. The source must hold at least
/// T + min_offset samples.
inline CausalResult causal_test(std::span<const double> x, std::span<const double> y, const CausalTestConfig& cfg)
{
    detail::require(cfg.surrogates >= 1, "causal_test: need at least one surrogate");
    detail::require(cfg.alpha > 0.0 && cfg.alpha < 1.0, "causal_test: alpha must lie in (0, 1)");
    detail::require(x.size() == y.size(), "causal_test: series lengths differ");
    const Index window = cfg.window > 0 ? cfg.window : static_cast<Index>(x.size()) - cfg.min_offset;
    if (window < 2 || window > static_cast<Index>(x.size())) {
        throw InvalidArgument("causal_test: series of length " + std::to_string(x.size()) +
                              " cannot hold a window plus offset " + std::to_string(cfg.min_offset));
    }
    const CausalWidths widths = resolve_causal_widths(x, y, cfg.spec, cfg.widths, cfg.width_scale);
    CausalResult out;
    out.score = causal_score(x.first(static_cast<std::size_t>(window)), y.first(static_cast<std::size_t>(window)),
                             cfg.spec, widths);
    int above = 0;
    int below = 0;
    for (int k = 0; k < cfg.surrogates; ++k) {
        Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(k), 11));
        const SurrogatePair s = surrogate_pair(x, y, window, cfg.min_offset, rng);
        const double v = causal_score(s.x, s.y, cfg.spec, widths);
        above += v >= out.score ? 1 : 0;
        below += v <= out.score ? 1 : 0;
    }
    const double n = 1.0 + cfg.surrogates;
    const double p_upper = (1.0 + above) / n;
    const double p_lower = (1.0 + below) / n;
    out.p_value = std::min(1.0, 2.0 * std::min(p_upper, p_lower));
    if (out.p_value < cfg.alpha) {
        out.direction = p_upper < p_lower ? Direction::x_causes_y : Direction::y_causes_x;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark generators.

/// Deterministic coupled Henon recursion from explicit initial states
/// (x_{i,0}, x_{i,1}) per map; returns `steps` values per map including them.
inline std::vector<Series> henon_trajectory(std::span<const double> x0, std::span<const double> x1, double coupling,
                                            Index steps)
{
    detail::require(x0.size() == x1.size() && x0.size() >= 1, "henon_trajectory: one initial pair per map");
    detail::require(steps >= 2, "henon_trajectory: need at least the two initial steps");
    const std::size_t chain = x0.size();
    std::vector<Series> out(chain, Series(static_cast<std::size_t>(steps)));
    for (std::size_t i = 0; i < chain; ++i) {
        out[i][0] = x0[i];
        out[i][1] = x1[i];
    }
    for (auto t = static_cast<std::size_t>(2); t < static_cast<std::size_t>(steps); ++t) {
        out[0][t] = 1.4 - out[0][t - 1] * out[0][t - 1] + 0.3 * out[0][t - 2];
        for (std::size_t i = 1; i < chain; ++i) {
            const double drive = coupling * out[i - 1][t - 1] + (1.0 - coupling) * out[i][t - 1];
            out[i][t] = 1.4 - drive * drive + 0.3 * out[i][t - 2];
        }
    }
    return out;
}

struct HenonConfig {
    int chain_length = 5;
    double coupling = 0.3;
    Index n = 1024;
    Index burn_in = 1000;
    std::uint64_t seed = 0;
};

/// Coupled Henon maps x_{i-1} -> x_i. Initial states are drawn from U(0, 0.1);
/// a trajectory leaving |x| <= 1e6 is restarted from fresh draws.
inline std::vector<Series> henon_generate(const HenonConfig& cfg)
{
    detail::require(cfg.chain_length >= 2, "henon_generate: chain_length must be at least 2");
    detail::require(cfg.n >= 1 && cfg.burn_in >= 0, "henon_generate: invalid length");
    const auto chain = static_cast<std::size_t>(cfg.chain_length);
    for (int attempt = 0; attempt <= 100; ++attempt) {
        Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(attempt), 21));
        std::vector<double> a(chain), b(chain);
        for (std::size_t i = 0; i < chain; ++i) {
            a[i] = 0.1 * uniform01(rng);
            b[i] = 0.1 * uniform01(rng);
        }
        const auto full = henon_trajectory(a, b, cfg.coupling, cfg.burn_in + cfg.n);
        bool finite = true;
        for (const auto& s : full) {
            for (double v : s) {
                if (!std::isfinite(v) || std::abs(v) > 1e6) {
                    finite = false;
                    break;
                }
            }
        }
        if (!finite) {
            continue;
        }
        std::vector<Series> out;
        for (const auto& s : full) {
            out.emplace_back(s.begin() + cfg.burn_in, s.end());
        }
        return out;
    }
    throw NumericalError("henon_generate: trajectory diverged after 100 restarts");
}

struct Nlvar3Config {
    Index n = 1024;
    Index burn_in = 1000;
    double noise = 0.01;
    /// Coupling of x1 x2 into x2, x2 into x3, and x1^2 into x3.
    double c12 = 0.5;
    double c23 = 0.3;
    double c13 = 0.5;
    std::uint64_t seed = 0;
};

/// Three-variable nonlinear VAR with lag-1 couplings x1 -> x2, x1 -> x3, x2 -> x3.
inline std::vector<Series> nlvar3_generate(const Nlvar3Config& cfg)
{
    detail::require(cfg.n >= 1 && cfg.burn_in >= 0, "nlvar3_generate: invalid length");
    Rng rng(stream_seed(cfg.seed, 0, 31));
    const auto self = [](double v) { return 3.4 * v * (1.0 - v * v) * std::exp(-v * v); };
    double x1 = cfg.noise * standard_normal(rng);
    double x2 = cfg.noise * standard_normal(rng);
    double x3 = cfg.noise * standard_normal(rng);
    std::vector<Series> out(3);
    for (auto& s : out) {
        s.reserve(static_cast<std::size_t>(cfg.n));
    }
    for (Index t = 0; t < cfg.burn_in + cfg.n; ++t) {
        const double w1 = standard_normal(rng);
        const double w2 = standard_normal(rng);
        const double w3 = standard_normal(rng);
        const double n1 = self(x1) + cfg.noise * w1;
        const double n2 = self(x2) + cfg.c12 * x1 * x2 + cfg.noise * w2;
        const double n3 = self(x3) + cfg.c23 * x2 + cfg.c13 * x1 * x1 + cfg.noise * w3;
        x1 = n1;
        x2 = n2;
        x3 = n3;
        if (!std::isfinite(x1) || !std::isfinite(x2) || !std::isfinite(x3)) {
            throw NumericalError("nlvar3_generate: trajectory is not finite");
        }
        if (t >= cfg.burn_in) {
            out[0].push_back(x1);
            out[1].push_back(x2);
            out[2].push_back(x3);
        }
    }
    return out;
}

/// Two independent Gaussian white-noise series.
inline std::vector<Series> noise_pair_generate(Index n, std::uint64_t seed)
{
    Rng rng(stream_seed(seed, 0, 41));
    std::vector<Series> out(2, Series(static_cast<std::size_t>(n)));
    for (auto& s : out) {
        for (auto& v : s) {
            v = standard_normal(rng);
        }
    }
    return out;
}

} // namespace ccs
