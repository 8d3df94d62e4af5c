#pragma once

// Time-series clustering by predictive dynamics: Hankel embedding, conditional
// CS dissimilarities between series, spectral clustering, PAM k-medoids and NMI.

#include "ccs/dataset.hpp"
#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/kernels.hpp"
#include "ccs/random.hpp"
#include "ccs/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ccs {

struct TimeSeries {
    /// L x d, one time step per row.
    Samples values;
    std::optional<int> label;

    Index length() const noexcept { return values.rows(); }
    Index dim() const noexcept { return values.cols(); }

    static TimeSeries univariate(std::span<const double> v, std::optional<int> label = std::nullopt)
    {
        return {column(v), label};
    }
};

struct HankelPair {
    Samples inputs;
    Samples targets;
    Index order = 0;

    PairedDataset dataset() const { return {inputs, targets}; }
};

/// Row i of the inputs is [x_i, ..., x_{i+K-1}] flattened time-major; row i of
/// the targets is x_{i+K}.
inline HankelPair hankel_embed(const TimeSeries& ts, Index order)
{
    const Index len = ts.length();
    const Index d = ts.dim();
    detail::require(d >= 1, "hankel_embed: series has no channels");
    detail::require(order >= 1, "hankel_embed: order must be positive");
    detail::require(order < len, "hankel_embed: order must be below the series length");
    HankelPair out;
    out.order = order;
    out.inputs.resize(len - order, order * d);
    out.targets.resize(len - order, d);
    for (Index i = 0; i < len - order; ++i) {
        for (Index lag = 0; lag < order; ++lag) {
            out.inputs.block(i, lag * d, 1, d) = ts.values.row(i + lag);
        }
        out.targets.row(i) = ts.values.row(i + order);
    }
    return out;
}

/// Conditional CS divergence between the one-step predictive laws of two series.
inline double ts_dissimilarity(const TimeSeries& a, const TimeSeries& b, Index order, double width_x, double width_y)
{
    return conditional_cs(hankel_embed(a, order).dataset(), hankel_embed(b, order).dataset(), width_x, width_y);
}

/// Widths resolved by the median heuristic on the pooled Hankel inputs and
/// pooled targets of the pair, which keeps the value symmetric in (a, b).
inline double ts_dissimilarity(const TimeSeries& a, const TimeSeries& b, Index order)
{
    const PairedDataset ha = hankel_embed(a, order).dataset();
    const PairedDataset hb = hankel_embed(b, order).dataset();
    const PairedDataset pooled = pool(ha, hb);
    return conditional_cs(ha, hb, median_bandwidth(pooled.x(), 1000), median_bandwidth(pooled.y(), 1000));
}

struct DissimilarityMatrix {
    Matrix entries;
    /// Pairs whose estimate failed (disjoint support); their entries are +inf.
    std::vector<std::pair<Index, Index>> failures;
};

struct PairwiseConfig {
    Index order = 10;
    KernelConfig x_kernel{1.0, BandwidthMode::median_heuristic};
    KernelConfig y_kernel{1.0, BandwidthMode::median_heuristic};
};

inline DissimilarityMatrix pairwise_matrix(const std::vector<TimeSeries>& collection, const PairwiseConfig& cfg)
{
    const auto n = static_cast<Index>(collection.size());
    detail::require(n >= 2, "pairwise_matrix: need at least two series");
    std::vector<PairedDataset> embedded;
    embedded.reserve(collection.size());
    for (const auto& ts : collection) {
        embedded.push_back(hankel_embed(ts, cfg.order).dataset());
    }
    DissimilarityMatrix out;
    out.entries = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const auto& a = embedded[static_cast<std::size_t>(i)];
            const auto& b = embedded[static_cast<std::size_t>(j)];
            double value = std::numeric_limits<double>::infinity();
            try {
                const bool needs_pool = cfg.x_kernel.mode == BandwidthMode::median_heuristic ||
                                        cfg.y_kernel.mode == BandwidthMode::median_heuristic;
                const PairedDataset pooled = needs_pool ? pool(a, b) : PairedDataset{};
                const double wx = cfg.x_kernel.mode == BandwidthMode::median_heuristic
                                      ? median_bandwidth(pooled.x(), 1000)
                                      : cfg.x_kernel.width;
                const double wy = cfg.y_kernel.mode == BandwidthMode::median_heuristic
                                      ? median_bandwidth(pooled.y(), 1000)
                                      : cfg.y_kernel.width;
                value = conditional_cs(a, b, wx, wy);
            }
            catch (const DisjointSupport&) {
                out.failures.emplace_back(i, j);
            }
            out.entries(i, j) = value;
            out.entries(j, i) = value;
        }
    }
    return out;
}

inline Matrix to_affinity(const Matrix& d, double b)
{
    detail::require(b > 0.0, "to_affinity: scale must be positive");
    return (-d.array() / b).exp().matrix();
}

struct ClusterAssignment {
    std::vector<int> labels;
    int k = 0;
};

namespace detail {

inline double row_sqdist(const Matrix& a, Index i, const Matrix& c, Index j)
{
    return (a.row(i) - c.row(j)).squaredNorm();
}

struct KmeansFit {
    std::vector<int> labels;
    double inertia = std::numeric_limits<double>::infinity();
};

/// Lloyd iterations from a k-means++ start.
inline KmeansFit kmeans_once(const Matrix& pts, int k, Rng& rng, int max_iter = 300)
{
    const Index n = pts.rows();
    Matrix centers(k, pts.cols());
    centers.row(0) = pts.row(static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n))));
    std::vector<double> nearest(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            auto& v = nearest[static_cast<std::size_t>(i)];
            v = std::min(v, row_sqdist(pts, i, centers, c - 1));
            total += v;
        }
        Index pick = n - 1;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (Index i = 0; i < n; ++i) {
                target -= nearest[static_cast<std::size_t>(i)];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        else {
            pick = static_cast<Index>(uniform_index(rng, static_cast<std::size_t>(n)));
        }
        centers.row(c) = pts.row(pick);
    }

    KmeansFit fit;
    fit.labels.assign(static_cast<std::size_t>(n), -1);
    for (int iter = 0; iter < max_iter; ++iter) {
        bool changed = false;
        double inertia = 0.0;
        for (Index i = 0; i < n; ++i) {
            int best = 0;
            double best_d = row_sqdist(pts, i, centers, 0);
            for (int c = 1; c < k; ++c) {
                const double dist = row_sqdist(pts, i, centers, c);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            inertia += best_d;
            if (fit.labels[static_cast<std::size_t>(i)] != best) {
                fit.labels[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        fit.inertia = inertia;
        if (!changed) {
            break;
        }
        Matrix sums = Matrix::Zero(k, pts.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            const int c = fit.labels[static_cast<std::size_t>(i)];
            sums.row(c) += pts.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centers.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
            }
        }
    }
    return fit;
}

/// Relabels clusters in order of first appearance so equal partitions compare equal.
inline std::vector<int> canonical_labels(const std::vector<int>& labels)
{
    std::map<int, int> remap;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
        out.push_back(it->second);
    }
    return out;
}

} // namespace detail

/// Best of `restarts` seeded k-means++ runs by inertia.
inline ClusterAssignment kmeans(const Matrix& points, int k, std::uint64_t seed, int restarts = 10)
{
    detail::require(k >= 1 && k <= points.rows(), "kmeans: k must lie in [1, n]");
    detail::KmeansFit best;
    for (int r = 0; r < restarts; ++r) {
        Rng rng(stream_seed(seed, static_cast<std::uint64_t>(r)));
        detail::KmeansFit fit = detail::kmeans_once(points, k, rng);
        if (fit.inertia < best.inertia) {
            best = std::move(fit);
        }
    }
    return {detail::canonical_labels(best.labels), k};
}

/// Normalized spectral clustering: top-k eigenvectors of D^-1/2 A D^-1/2,
/// rows scaled to unit length, then k-means.
inline ClusterAssignment spectral_cluster(const Matrix& affinity, int k, std::uint64_t seed)
{
    const Index n = affinity.rows();
    detail::require(affinity.cols() == n, "spectral_cluster: square affinity required");
    detail::require(k >= 2 && k <= n, "spectral_cluster: k must lie in [2, n]");
    detail::require((affinity - affinity.transpose()).cwiseAbs().maxCoeff() <= 1e-10, "spectral_cluster: affinity must be symmetric");
    detail::require(affinity.minCoeff() >= 0.0, "spectral_cluster: affinity must be nonnegative");
    const Vector degree = affinity.rowwise().sum();
    detail::require(degree.minCoeff() > 0.0, "spectral_cluster: isolated node");
    const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
    Matrix normalized = inv_sqrt.asDiagonal() * affinity * inv_sqrt.asDiagonal();
    normalized = 0.5 * (normalized + normalized.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(normalized);
    if (es.info() != Eigen::Success) {
        throw NumericalError("spectral_cluster: eigendecomposition failed");
    }
    Matrix embedding = es.eigenvectors().rightCols(k);
    for (Index i = 0; i < n; ++i) {
        const double norm = embedding.row(i).norm();
        if (norm > 0.0) {
            embedding.row(i) /= norm;
        }
    }
    return kmeans(embedding, k, seed);
}

struct KmedoidsResult {
    ClusterAssignment assignment;
    std::vector<Index> medoids;
    /// Objective after BUILD and after each accepted swap; non-increasing.
    std::vector<double> cost_history;
};

/// PAM: greedy BUILD followed by best-improvement SWAP until no swap helps.
/// The seed fixes the candidate scan order, which only matters for ties.
inline KmedoidsResult kmedoids(const Matrix& d, int k, std::uint64_t seed)
{
    const Index n = d.rows();
    detail::require(d.cols() == n, "kmedoids: square dissimilarity required");
    detail::require(k >= 1 && k <= n, "kmedoids: k must lie in [1, n]");
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    Rng rng(seed);
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
    }

    const auto cost_of = [&](const std::vector<Index>& medoids) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Index m : medoids) {
                best = std::min(best, d(i, m));
            }
            total += best;
        }
        return total;
    };

    std::vector<Index> medoids;
    std::vector<bool> is_medoid(static_cast<std::size_t>(n), false);
    for (int c = 0; c < k; ++c) {
        Index best_candidate = -1;
        double best_cost = std::numeric_limits<double>::infinity();
        for (Index cand : order) {
            if (is_medoid[static_cast<std::size_t>(cand)]) {
                continue;
            }
            medoids.push_back(cand);
            const double cost = cost_of(medoids);
            medoids.pop_back();
            if (cost < best_cost) {
                best_cost = cost;
                best_candidate = cand;
            }
        }
        medoids.push_back(best_candidate);
        is_medoid[static_cast<std::size_t>(best_candidate)] = true;
    }

    KmedoidsResult out;
    double current = cost_of(medoids);
    out.cost_history.push_back(current);
    for (;;) {
        double best_cost = current;
        std::size_t best_slot = 0;
        Index best_in = -1;
        for (std::size_t slot = 0; slot < medoids.size(); ++slot) {
            const Index old = medoids[slot];
            for (Index cand : order) {
                if (is_medoid[static_cast<std::size_t>(cand)]) {
                    continue;
                }
                medoids[slot] = cand;
                const double cost = cost_of(medoids);
                if (cost < best_cost - 1e-12 * std::max(1.0, std::abs(best_cost))) {
                    best_cost = cost;
                    best_slot = slot;
                    best_in = cand;
                }
            }
            medoids[slot] = old;
        }
        if (best_in < 0) {
            break;
        }
        is_medoid[static_cast<std::size_t>(medoids[best_slot])] = false;
        is_medoid[static_cast<std::size_t>(best_in)] = true;
        medoids[best_slot] = best_in;
        current = best_cost;
        out.cost_history.push_back(current);
    }

    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < medoids.size(); ++c) {
            if (d(i, medoids[c]) < best) {
                best = d(i, medoids[c]);
                labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
            }
        }
    }
    out.medoids = medoids;
    out.assignment = {labels, k};
    return out;
}

/// Normalized mutual information I(a; b) / sqrt(H(a) H(b)).
inline double nmi(std::span<const int> a, std::span<const int> b)
{
    detail::require(a.size() == b.size(), "nmi: label vectors differ in length");
    detail::require(!a.empty(), "nmi: empty label vectors");
    const auto n = static_cast<double>(a.size());
    std::map<int, double> pa, pb;
    std::map<std::pair<int, int>, double> joint;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa[a[i]] += 1.0;
        pb[b[i]] += 1.0;
        joint[{a[i], b[i]}] += 1.0;
    }
    const auto entropy = [n](const std::map<int, double>& counts) {
        double h = 0.0;
        for (const auto& [label, c] : counts) {
            h -= c / n * std::log(c / n);
        }
        return h;
    };
    const double ha = entropy(pa);
    const double hb = entropy(pb);
    if (ha <= 0.0 || hb <= 0.0) {
        return (ha <= 0.0 && hb <= 0.0) ? 1.0 : 0.0;
    }
    double mi = 0.0;
    for (const auto& [key, c] : joint) {
        mi += c / n * std::log(c * n / (pa[key.first] * pb[key.second]));
    }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

inline double nmi(const ClusterAssignment& a, const ClusterAssignment& b)
{
    return nmi(a.labels, b.labels);
}

enum class ClusterMethod { spectral, kmedoids };

inline const std::vector<double>& default_affinity_grid()
{
    static const std::vector<double> grid{0.1, 0.2, 1.0, 2.0, 10.0, 20.0};
    return grid;
}

struct ClusterReport {
    ClusterAssignment assignment;
    /// Affinity scale used (spectral only).
    double b = 0.0;
    std::optional<double> nmi;
};

/// Clusters a dissimilarity matrix. With ground-truth labels the spectral
/// affinity scale is the grid value with the best NMI; without labels the
/// first grid value is used.
inline ClusterReport cluster_dissimilarity(const Matrix& d, int k, ClusterMethod method, std::span<const double> b_grid,
                                           std::uint64_t seed, const std::vector<int>* truth = nullptr)
{
    ClusterReport best;
    if (method == ClusterMethod::kmedoids) {
        best.assignment = kmedoids(d, k, seed).assignment;
        if (truth != nullptr) {
            best.nmi = nmi(best.assignment.labels, *truth);
        }
        return best;
    }
    detail::require(!b_grid.empty(), "cluster_dissimilarity: empty affinity grid");
    bool first = true;
    for (double b : b_grid) {
        ClusterReport r;
        r.b = b;
        r.assignment = spectral_cluster(to_affinity(d, b), k, seed);
        if (truth == nullptr) {
            return r;
        }
        r.nmi = nmi(r.assignment.labels, *truth);
        if (first || *r.nmi > *best.nmi) {
            best = std::move(r);
            first = false;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// UCR-format ingestion: one series per line, class label first.

struct UcrOptions {
    /// 0 selects automatic detection (tab, comma, or whitespace).
    char delimiter = 0;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char delimiter)
{
    std::vector<std::string_view> out;
    if (delimiter == ' ') {
        std::size_t i = 0;
        while (i < line.size()) {
            while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
                ++i;
            }
            const std::size_t start = i;
            while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
                ++i;
            }
            if (i > start) {
                out.push_back(line.substr(start, i - start));
            }
        }
        return out;
    }
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(delimiter, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline bool parse_double(std::string_view field, double& out)
{
    field = trim(field);
    if (field.empty()) {
        return false;
    }
    if (field.front() == '+') {
        field.remove_prefix(1);
    }
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

} // namespace detail

inline std::vector<TimeSeries> parse_ucr(std::istream& in, const std::string& source, const UcrOptions& opts = {})
{
    std::vector<TimeSeries> out;
    std::string line;
    std::size_t line_no = 0;
    Index expected = -1;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        char delim = opts.delimiter;
        if (delim == 0) {
            delim = view.find('\t') != std::string_view::npos ? '\t'
                    : view.find(',') != std::string_view::npos ? ','
                                                                : ' ';
        }
        const auto fields = detail::split_fields(view, delim);
        const auto where = [&] { return source + ":" + std::to_string(line_no); };
        if (fields.size() < 3) {
            throw DataError(where() + ": expected a label and at least two values");
        }
        double label_value = 0.0;
        if (!detail::parse_double(fields[0], label_value) || label_value != std::floor(label_value)) {
            throw DataError(where() + ": class label '" + std::string(fields[0]) + "' is not an integer");
        }
        std::vector<double> values(fields.size() - 1);
        for (std::size_t f = 1; f < fields.size(); ++f) {
            if (!detail::parse_double(fields[f], values[f - 1])) {
                throw DataError(where() + ": field " + std::to_string(f + 1) + " ('" + std::string(fields[f]) +
                                "') is not numeric");
            }
        }
        const auto len = static_cast<Index>(values.size());
        if (expected >= 0 && len != expected) {
            throw DataError(where() + ": ragged row with " + std::to_string(len) + " values, expected " +
                            std::to_string(expected));
        }
        expected = len;
        out.push_back(TimeSeries::univariate(values, static_cast<int>(label_value)));
    }
    if (out.empty()) {
        throw DataError(source + ": no series found");
    }
    return out;
}

inline std::vector<TimeSeries> load_ucr(const std::string& path, const UcrOptions& opts = {})
{
    std::ifstream in(path);
    if (!in) {
        throw DataError(path + ": cannot open file");
    }
    return parse_ucr(in, path, opts);
}

inline std::vector<int> labels_of(const std::vector<TimeSeries>& collection)
{
    std::vector<int> out;
    out.reserve(collection.size());
    for (const auto& ts : collection) {
        detail::require(ts.label.has_value(), "labels_of: series without a label");
        out.push_back(*ts.label);
    }
    return out;
}

/// Zero-mean AR(2) series x_t = phi1 x_{t-1} + phi2 x_{t-2} + noise_scale e_t,
/// started from zeros with a discarded burn-in.
inline TimeSeries ar2_generate(double phi1, double phi2, Index length, std::uint64_t seed, double noise_scale = 1.0,
                               Index burn_in = 200)
{
    detail::require(length >= 2, "ar2_generate: length must be at least 2");
    Rng rng(seed);
    double prev2 = 0.0;
    double prev1 = 0.0;
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(length));
    for (Index t = 0; t < burn_in + length; ++t) {
        const double x = phi1 * prev1 + phi2 * prev2 + noise_scale * standard_normal(rng);
        prev2 = prev1;
        prev1 = x;
        if (t >= burn_in) {
            values.push_back(x);
        }
    }
    return TimeSeries::univariate(values);
}

/// Labelled AR(2) collection: `per_family` series of each (phi1, phi2) family,
/// label = family index.
inline std::vector<TimeSeries> ar_families(std::span<const std::array<double, 2>> phis, int per_family, Index length,
                                           std::uint64_t seed)
{
    detail::require(!phis.empty() && per_family >= 1, "ar_families: need at least one family and one series");
    std::vector<TimeSeries> out;
    for (std::size_t f = 0; f < phis.size(); ++f) {
        for (int r = 0; r < per_family; ++r) {
            const auto stream = static_cast<std::uint64_t>(f) * static_cast<std::uint64_t>(per_family) +
                                static_cast<std::uint64_t>(r);
            TimeSeries ts = ar2_generate(phis[f][0], phis[f][1], length, stream_seed(seed, stream, 4));
            ts.label = static_cast<int>(f);
            out.push_back(std::move(ts));
        }
    }
    return out;
}

/// The three well-separated families used by the synthetic clustering check.
inline std::vector<TimeSeries> ar_benchmark_collection(std::uint64_t seed)
{
    static constexpr std::array<std::array<double, 2>, 3> phis{{{0.6, -0.3}, {-0.6, -0.3}, {0.0, 0.7}}};
    return ar_families(phis, 10, 200, seed);
}

} // namespace ccs
