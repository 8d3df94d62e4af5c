#pragma once

// Permutation testing, the two simulation generators, power matrices, and the
// graph-recovery metrics used to score task-structure discovery.

#include "ccs/dataset.hpp"
#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/kernels.hpp"
#include "ccs/random.hpp"
#include "ccs/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ccs {

using Measure = std::function<double(const PairedDataset&, const PairedDataset&)>;

struct PermutationConfig {
    int permutations = 100;
    double significance = 0.05;
    std::uint64_t seed = 0;
};

struct PermutationResult {
    double statistic = 0.0;
    double p_value = 1.0;
    bool reject = false;
};

namespace detail {

inline void check_permutation_config(const PermutationConfig& cfg)
{
    require(cfg.permutations >= 1, "permutation_test: need at least one permutation");
    require(cfg.significance > 0.0 && cfg.significance < 1.0, "permutation_test: significance must lie in (0, 1)");
}

template <class T>
void shuffle(std::vector<T>& values, Rng& rng)
{
    for (std::size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[uniform_index(rng, i)]);
    }
}

inline PermutationResult finish_permutation(double observed, int at_least, const PermutationConfig& cfg)
{
    PermutationResult r;
    r.statistic = observed;
    r.p_value = (1.0 + at_least) / (1.0 + cfg.permutations);
    r.reject = r.p_value <= cfg.significance;
    return r;
}

} // namespace detail

/// Two-sample test of p_s(y|x) = p_t(y|x). The pooled rows are reshuffled as
/// whole (x, y) pairs and re-split into groups of the original sizes.
inline PermutationResult permutation_test(const PairedDataset& s, const PairedDataset& t, const Measure& measure,
                                          const PermutationConfig& cfg)
{
    detail::check_permutation_config(cfg);
    const double observed = measure(s, t);
    const PairedDataset pooled = pool(s, t);
    std::vector<Index> order(static_cast<std::size_t>(pooled.size()));
    std::iota(order.begin(), order.end(), Index{0});
    const auto split = order.begin() + s.size();
    int at_least = 0;
    for (int m = 0; m < cfg.permutations; ++m) {
        Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(m)));
        detail::shuffle(order, rng);
        const std::vector<Index> first(order.begin(), split);
        const std::vector<Index> second(split, order.end());
        if (observed <= measure(pooled.subset(first), pooled.subset(second))) {
            ++at_least;
        }
    }
    return detail::finish_permutation(observed, at_least, cfg);
}

/// Conditional CS permutation test on one pooled Gram pair; each permutation
/// only relabels rows, so no kernel is re-evaluated.
inline PermutationResult permutation_test_cs(const PairedDataset& s, const PairedDataset& t, double width_x,
                                             double width_y, const PermutationConfig& cfg)
{
    detail::check_permutation_config(cfg);
    require_same_dims(s, t, "permutation_test_cs");
    const PairedDataset pooled = pool(s, t);
    const Matrix k = gram(pooled.x(), width_x);
    const Matrix kl = k.cwiseProduct(gram(pooled.y(), width_y));
    std::vector<Group> groups(static_cast<std::size_t>(pooled.size()), Group::q);
    std::fill(groups.begin(), groups.begin() + s.size(), Group::p);
    const double observed = conditional_cs_split(k, kl, groups);
    int at_least = 0;
    for (int m = 0; m < cfg.permutations; ++m) {
        Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(m)));
        detail::shuffle(groups, rng);
        if (observed <= conditional_cs_split(k, kl, groups)) {
            ++at_least;
        }
    }
    return detail::finish_permutation(observed, at_least, cfg);
}

enum class MeasureKind { conditional_cs, conditional_kl, conditional_mmd, conditional_von_neumann };

inline std::string_view measure_name(MeasureKind kind)
{
    switch (kind) {
    case MeasureKind::conditional_cs: return "cond-cs";
    case MeasureKind::conditional_kl: return "cond-kl";
    case MeasureKind::conditional_mmd: return "cond-mmd";
    case MeasureKind::conditional_von_neumann: return "cond-vn";
    }
    return "unknown";
}

inline MeasureKind parse_measure(std::string_view name)
{
    for (auto kind : {MeasureKind::conditional_cs, MeasureKind::conditional_kl, MeasureKind::conditional_mmd,
                      MeasureKind::conditional_von_neumann}) {
        if (measure_name(kind) == name) {
            return kind;
        }
    }
    throw InvalidArgument("unknown measure '" + std::string(name) + "' (expected cond-cs, cond-kl, cond-mmd, cond-vn)");
}

/// Kernel widths resolved once from a pooled sample by the median heuristic.
struct Widths {
    double x = 1.0;
    double y = 1.0;

    static Widths median_of(const PairedDataset& pooled, Index max_rows = 1000)
    {
        return {median_bandwidth(pooled.x(), max_rows), median_bandwidth(pooled.y(), max_rows)};
    }
};

inline Measure make_measure(MeasureKind kind, Widths widths, int knn_neighbors = 3, double cmmd_ridge = 1e-3)
{
    switch (kind) {
    case MeasureKind::conditional_cs:
        return [widths](const PairedDataset& s, const PairedDataset& t) {
            return conditional_cs(s, t, widths.x, widths.y);
        };
    case MeasureKind::conditional_kl:
        return [knn_neighbors](const PairedDataset& s, const PairedDataset& t) {
            return conditional_kl(s, t, KnnConfig{knn_neighbors}).value;
        };
    case MeasureKind::conditional_mmd:
        return [widths, cmmd_ridge](const PairedDataset& s, const PairedDataset& t) {
            return conditional_mmd(s, t, CmmdConfig{cmmd_ridge, widths.x, widths.y});
        };
    case MeasureKind::conditional_von_neumann:
        return [](const PairedDataset& s, const PairedDataset& t) { return conditional_von_neumann(s, t); };
    }
    throw InvalidArgument("make_measure: unknown measure");
}

/// Measure whose widths are re-resolved for every pair from the pooled pair.
inline Measure make_pairwise_measure(MeasureKind kind)
{
    return [kind](const PairedDataset& s, const PairedDataset& t) {
        return make_measure(kind, Widths::median_of(pool(s, t)))(s, t);
    };
}

/// Runs the permutation test for `kind`, resolving widths on the pooled
/// sample (a permutation-invariant choice) and using the fast route for CS.
inline PermutationResult permutation_test(const PairedDataset& s, const PairedDataset& t, MeasureKind kind,
                                          const PermutationConfig& cfg)
{
    const Widths widths = Widths::median_of(pool(s, t));
    if (kind == MeasureKind::conditional_cs) {
        return permutation_test_cs(s, t, widths.x, widths.y, cfg);
    }
    return permutation_test(s, t, make_measure(kind, widths), cfg);
}

// ---------------------------------------------------------------------------
// Five regression sets a..e sharing p(x) with distinct p(y|x).

enum class Sim1Set { a, b, c, d, e };

inline constexpr std::array<Sim1Set, 5> kSim1Sets{Sim1Set::a, Sim1Set::b, Sim1Set::c, Sim1Set::d, Sim1Set::e};

inline Sim1Set parse_sim1_set(char id)
{
    if (id < 'a' || id > 'e') {
        throw InvalidArgument(std::string("unknown simulation set '") + id + "' (expected a..e)");
    }
    return kSim1Sets[static_cast<std::size_t>(id - 'a')];
}

inline bool sim1_uses_logistic(Sim1Set set)
{
    return set == Sim1Set::c || set == Sim1Set::e;
}

/// Deterministic part of each set plus the supplied noise draw.
inline double sim1_response(Sim1Set set, std::span<const double> x, double noise)
{
    double linear = 0.0;
    double square = 0.0;
    for (double v : x) {
        linear += v;
        square += v * v;
    }
    switch (set) {
    case Sim1Set::a: return 1.0 + linear + noise;
    case Sim1Set::b: return 4.0 + linear + noise;
    case Sim1Set::c: return 1.0 + linear + noise;
    case Sim1Set::d: return 1.0 + square + noise;
    case Sim1Set::e: return 1.0 + square + noise;
    }
    throw InvalidArgument("sim1_response: unknown set");
}

inline PairedDataset sim1_generate(Sim1Set set, Index n, Index p, std::uint64_t seed)
{
    detail::require(n >= 1 && p >= 1, "sim1_generate: n and p must be positive");
    Rng rng(seed);
    Samples x(n, p);
    Samples y(n, 1);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < p; ++j) {
            x(i, j) = standard_normal(rng);
        }
        const double noise = sim1_uses_logistic(set) ? logistic(rng, 1.0, 1.0) : standard_normal(rng);
        y(i, 0) = sim1_response(set, row_span(x, i), noise);
    }
    return {std::move(x), std::move(y)};
}

struct PowerMatrix {
    Matrix entries = Matrix::Zero(5, 5);
    int trials = 0;
    std::string measure_name;
};

struct PowerConfig {
    Index n = 500;
    Index p = 10;
    int trials = 20;
    std::uint64_t seed = 0;
    PermutationConfig permutation;
};

/// Entry (i, j): fraction of trials in which the test rejects p_i(y|x) = p_j(y|x).
/// Every trial draws fresh samples; the diagonal compares two independent
/// samples of the same set and estimates the false-positive rate.
inline PowerMatrix power_matrix(MeasureKind kind, const PowerConfig& cfg)
{
    detail::require(cfg.trials >= 1, "power_matrix: need at least one trial");
    PowerMatrix out;
    out.trials = cfg.trials;
    out.measure_name = std::string(measure_name(kind));
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            int rejections = 0;
            for (int trial = 0; trial < cfg.trials; ++trial) {
                const auto stream = static_cast<std::uint64_t>((trial * 5 + static_cast<int>(i)) * 5 + static_cast<int>(j));
                const PairedDataset s = sim1_generate(kSim1Sets[i], cfg.n, cfg.p, stream_seed(cfg.seed, stream, 1));
                const PairedDataset t = sim1_generate(kSim1Sets[j], cfg.n, cfg.p, stream_seed(cfg.seed, stream, 2));
                PermutationConfig perm = cfg.permutation;
                perm.seed = stream_seed(cfg.seed, stream, 3);
                if (permutation_test(s, t, kind, perm).reject) {
                    ++rejections;
                }
            }
            out.entries(static_cast<Index>(i), static_cast<Index>(j)) =
                static_cast<double>(rejections) / static_cast<double>(cfg.trials);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Regression tasks whose weights rotate around a ring.

enum class InputDistribution { gaussian, uniform };

struct TaskCollection {
    std::vector<PairedDataset> tasks;
    std::vector<Vector> weights;
};

struct Sim2Config {
    int n_tasks = 15;
    Index dim = 20;
    Index n_per_task = 200;
    InputDistribution input = InputDistribution::gaussian;
    std::uint64_t seed = 0;
};

inline double sim2_angle(int task, int n_tasks)
{
    return 2.0 * std::numbers::pi * static_cast<double>(task) / static_cast<double>(n_tasks - 1);
}

inline TaskCollection sim2_generate(const Sim2Config& cfg)
{
    detail::require(cfg.n_tasks >= 3, "sim2_generate: need at least three tasks");
    detail::require(cfg.dim >= 2 && cfg.n_per_task >= 1, "sim2_generate: dim >= 2 and n_per_task >= 1 required");
    Rng weight_rng(stream_seed(cfg.seed, 0, 7));
    Vector base(cfg.dim);
    for (Index k = 0; k < cfg.dim; ++k) {
        base(k) = standard_normal(weight_rng);
    }
    TaskCollection out;
    for (int task = 0; task < cfg.n_tasks; ++task) {
        const double theta = sim2_angle(task, cfg.n_tasks);
        Vector w = base;
        // task 0 keeps the base weights untouched
        if (task > 0) {
            w(0) = std::cos(theta) * base(0) - std::sin(theta) * base(1);
            w(1) = std::sin(theta) * base(0) + std::cos(theta) * base(1);
        }
        Rng rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(task) + 1, 8));
        Samples x(cfg.n_per_task, cfg.dim);
        Samples y(cfg.n_per_task, 1);
        for (Index i = 0; i < cfg.n_per_task; ++i) {
            for (Index k = 0; k < cfg.dim; ++k) {
                x(i, k) = cfg.input == InputDistribution::gaussian ? standard_normal(rng) : uniform01(rng);
            }
            y(i, 0) = x.row(i).dot(w.transpose()) + standard_normal(rng);
        }
        out.tasks.emplace_back(std::move(x), std::move(y));
        out.weights.push_back(std::move(w));
    }
    return out;
}

/// Pairwise divergence table. Asymmetric measures are symmetrized by
/// averaging both directions; the diagonal is set to 0.
inline Matrix task_dissimilarity(const TaskCollection& tc, const Measure& measure)
{
    const auto n = static_cast<Index>(tc.tasks.size());
    detail::require(n >= 2, "task_dissimilarity: need at least two tasks");
    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const auto& a = tc.tasks[static_cast<std::size_t>(i)];
            const auto& b = tc.tasks[static_cast<std::size_t>(j)];
            const double v = 0.5 * (measure(a, b) + measure(b, a));
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return d;
}

inline PairedDataset pool_all(const std::vector<PairedDataset>& sets)
{
    detail::require(!sets.empty(), "pool_all: empty collection");
    PairedDataset out = sets.front();
    for (std::size_t i = 1; i < sets.size(); ++i) {
        out = pool(out, sets[i]);
    }
    return out;
}

struct MdsResult {
    Matrix coordinates;
    Vector eigenvalues;
    /// Set when fewer than `dims` positive eigenvalues existed and zero columns were padded.
    bool padded = false;
};

/// Classical (Torgerson) scaling of a dissimilarity matrix.
inline MdsResult classical_mds(const Matrix& d, Index dims = 2)
{
    const Index n = d.rows();
    detail::require(d.cols() == n && n >= 1, "classical_mds: square matrix required");
    detail::require(dims >= 1 && dims <= n, "classical_mds: dims must lie in [1, n]");
    detail::require((d - d.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, d.cwiseAbs().maxCoeff()),
                    "classical_mds: dissimilarities must be symmetric");
    const Matrix centering = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
    Matrix b = -0.5 * centering * d.cwiseProduct(d) * centering;
    b = 0.5 * (b + b.transpose());
    const Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    if (es.info() != Eigen::Success) {
        throw NumericalError("classical_mds: eigendecomposition failed");
    }
    MdsResult out;
    out.coordinates = Matrix::Zero(n, dims);
    out.eigenvalues = es.eigenvalues().reverse();
    const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    for (Index c = 0; c < dims; ++c) {
        const Index idx = n - 1 - c;
        const double lambda = es.eigenvalues()(idx);
        if (lambda > tol) {
            out.coordinates.col(c) = es.eigenvectors().col(idx) * std::sqrt(lambda);
        }
        else {
            out.padded = true;
        }
    }
    return out;
}

/// Symmetrized k-nearest-neighbour graph of a dissimilarity matrix. Ties are
/// broken towards the lower index; self-loops are excluded.
inline Matrix knn_graph(const Matrix& d, int k)
{
    const Index n = d.rows();
    detail::require(d.cols() == n, "knn_graph: square matrix required");
    detail::require(k >= 1 && k < n, "knn_graph: k must lie in [1, n)");
    Matrix a = Matrix::Zero(n, n);
    std::vector<Index> order;
    for (Index i = 0; i < n; ++i) {
        order.clear();
        for (Index j = 0; j < n; ++j) {
            if (j != i) {
                order.push_back(j);
            }
        }
        std::stable_sort(order.begin(), order.end(), [&](Index u, Index v) { return d(i, u) < d(i, v); });
        for (int r = 0; r < k; ++r) {
            const Index j = order[static_cast<std::size_t>(r)];
            a(i, j) = 1.0;
            a(j, i) = 1.0;
        }
    }
    return a;
}

/// Pairwise Euclidean distances between rows.
inline Matrix distance_matrix(const std::vector<Vector>& points)
{
    const auto n = static_cast<Index>(points.size());
    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            d(i, j) = d(j, i) = (points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)]).norm();
        }
    }
    return d;
}

/// Fraction of off-diagonal entries on which two adjacency matrices disagree.
inline double adjacency_error(const Matrix& truth, const Matrix& estimate)
{
    const Index n = truth.rows();
    detail::require(truth.cols() == n && estimate.rows() == n && estimate.cols() == n,
                    "adjacency_error: shape mismatch");
    detail::require(n >= 2, "adjacency_error: need at least two nodes");
    int differ = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            if (i != j && (truth(i, j) != 0.0) != (estimate(i, j) != 0.0)) {
                ++differ;
            }
        }
    }
    return static_cast<double>(differ) / static_cast<double>(n * (n - 1));
}

/// Combinatorial Laplacian D - A.
inline Matrix laplacian(const Matrix& adjacency)
{
    Matrix l = -adjacency;
    l.diagonal() = adjacency.rowwise().sum() - adjacency.diagonal();
    return l;
}

/// Eigenvector of the second-smallest Laplacian eigenvalue.
inline Vector fiedler_vector(const Matrix& l)
{
    detail::require(l.rows() == l.cols() && l.rows() >= 2, "fiedler_vector: square matrix of size >= 2 required");
    const Eigen::SelfAdjointEigenSolver<Matrix> es(l);
    if (es.info() != Eigen::Success) {
        throw NumericalError("fiedler_vector: eigendecomposition failed");
    }
    return es.eigenvectors().col(1);
}

inline double geodesic_distance(const Matrix& l_true, const Matrix& l_est, const Vector& x)
{
    detail::require(l_true.rows() == l_est.rows() && l_true.cols() == l_est.cols() && l_true.rows() == x.size(),
                    "geodesic_distance: shape mismatch");
    const double qt = x.dot(l_true * x);
    const double qe = x.dot(l_est * x);
    if (!(qt > 0.0) || !(qe > 0.0)) {
        throw NumericalError("geodesic_distance: probe vector lies in a Laplacian null space");
    }
    const double diff = (l_true * x - l_est * x).squaredNorm();
    return std::acosh(1.0 + diff * x.squaredNorm() / (2.0 * qt * qe));
}

struct StructureScores {
    double adjacency_error = 0.0;
    double geodesic = 0.0;
};

/// Compares the k-NN graph of an estimated dissimilarity matrix with the
/// k-NN graph of the true task weights.
inline StructureScores structure_scores(const Matrix& dissimilarity, const std::vector<Vector>& weights, int k = 3)
{
    const Matrix truth = knn_graph(distance_matrix(weights), k);
    const Matrix estimate = knn_graph(dissimilarity, k);
    const Matrix l_true = laplacian(truth);
    const Matrix l_est = laplacian(estimate);
    return {adjacency_error(truth, estimate), geodesic_distance(l_true, l_est, fiedler_vector(l_true))};
}

} // namespace ccs
