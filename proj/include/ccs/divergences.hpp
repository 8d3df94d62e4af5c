#pragma once

// Cauchy-Schwarz divergence, the conditional CS divergence with its
// shared-conditioner and nested-conditioner variants, and the comparison
// baselines (MMD, conditional MMD, kNN conditional KL, conditional von Neumann).
//
// All CS-family estimators use the resubstitution form: integrals of density
// products are replaced by sample means of the KDE at the samples, with the
// same width sigma for every Gram matrix.

#include "ccs/dataset.hpp"
#include "ccs/error.hpp"
#include "ccs/kernels.hpp"
#include "ccs/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace ccs {

/// Floor applied to every cross-sample kernel sum before it enters a log or a
/// denominator. Below it the sets are treated as having disjoint support.
inline constexpr double kPositiveFloor = 1e-300;

namespace detail {

inline Vector row_sums(const Matrix& m)
{
    Vector out(m.rows());
    for (Index i = 0; i < m.rows(); ++i) {
        double acc = 0.0;
        for (Index j = 0; j < m.cols(); ++j) {
            acc += m(i, j);
        }
        out(i) = acc;
    }
    return out;
}

inline double checked_log(double value, const char* what)
{
    if (!(value >= kPositiveFloor) || !std::isfinite(value)) {
        throw DisjointSupport(std::string(what) + ": cross-sample kernel mass below positive floor (disjoint support)");
    }
    return std::log(value);
}

inline void check_floor(const Vector& sums, const char* what)
{
    for (Index j = 0; j < sums.size(); ++j) {
        if (!(sums(j) >= kPositiveFloor)) {
            throw DisjointSupport(std::string(what) + ": row " + std::to_string(j) +
                                  " has no kernel mass in the other sample set (disjoint support)");
        }
    }
}

/// Row statistics of the two groups p (size M) and q (size N) that fully
/// determine the conditional CS estimate.
///   own(j)       = sum over the row's own group of K
///   cross(j)     = sum over the other group of K
///   num_own(j)   = sum over own group of K .* L
///   num_cross(j) = sum over other group of K .* L
struct SplitRowSums {
    Vector p_own, p_cross, p_num_own, p_num_cross;
    Vector q_own, q_cross, q_num_own, q_num_cross;
};

inline double combine_conditional_cs(const SplitRowSums& r)
{
    check_floor(r.p_cross, "conditional_cs");
    check_floor(r.q_cross, "conditional_cs");
    double within_p = 0.0;
    double cross_p = 0.0;
    for (Index j = 0; j < r.p_own.size(); ++j) {
        within_p += r.p_num_own(j) / (r.p_own(j) * r.p_own(j));
        cross_p += r.p_num_cross(j) / (r.p_own(j) * r.p_cross(j));
    }
    double within_q = 0.0;
    double cross_q = 0.0;
    for (Index j = 0; j < r.q_own.size(); ++j) {
        within_q += r.q_num_own(j) / (r.q_own(j) * r.q_own(j));
        cross_q += r.q_num_cross(j) / (r.q_cross(j) * r.q_own(j));
    }
    // Pairing (p within, p cross) and (q within, q cross) makes the result
    // exactly 0 when both groups hold identical data.
    return (checked_log(within_p, "conditional_cs") - checked_log(cross_p, "conditional_cs")) +
           (checked_log(within_q, "conditional_cs") - checked_log(cross_q, "conditional_cs"));
}

} // namespace detail

/// Marginal CS divergence between two sample sets, always >= 0.
inline double cs_divergence(const Samples& ys, const Samples& yt, double width)
{
    detail::require(ys.rows() >= 1 && yt.rows() >= 1, "cs_divergence: empty sample set");
    detail::require(ys.cols() == yt.cols(), "cs_divergence: dimension mismatch");
    const double within_s = gram(ys, width).mean();
    const double within_t = gram(yt, width).mean();
    const double cross = gram(ys, yt, width).mean();
    const double log_cross = detail::checked_log(cross, "cs_divergence");
    const double value = (std::log(within_s) - log_cross) + (std::log(within_t) - log_cross);
    // Nonnegative by Cauchy-Schwarz on the empirical mean embeddings; clamp rounding noise.
    return std::max(0.0, value);
}

/// Conditional CS divergence D(p_s(y|x); p_t(y|x)) from two paired datasets.
inline double conditional_cs(const PairedDataset& s, const PairedDataset& t, double width_x, double width_y)
{
    require_same_dims(s, t, "conditional_cs");
    detail::require(width_x > 0.0 && width_y > 0.0, "conditional_cs: widths must be positive");
    // Streams the row sums without storing any Gram: O(N^2 d) time, O(N) memory.
    // Own and cross sums walk their columns in the same order, so identical
    // samples give bitwise equal sums and an exact 0.
    const double sx = -1.0 / (2.0 * width_x * width_x);
    const double sy = -1.0 / (2.0 * width_y * width_y);
    const auto sums = [&](const PairedDataset& a, const PairedDataset& b, Vector& k, Vector& kl) {
        k.resize(a.size());
        kl.resize(a.size());
        for (Index i = 0; i < a.size(); ++i) {
            const auto xi = row_span(a.x(), i);
            const auto yi = row_span(a.y(), i);
            double acc_k = 0.0;
            double acc_kl = 0.0;
            for (Index j = 0; j < b.size(); ++j) {
                const double kx = std::exp(sx * squared_distance(xi, row_span(b.x(), j)));
                acc_k += kx;
                acc_kl += kx * std::exp(sy * squared_distance(yi, row_span(b.y(), j)));
            }
            k(i) = acc_k;
            kl(i) = acc_kl;
        }
    };
    detail::SplitRowSums r;
    sums(s, s, r.p_own, r.p_num_own);
    sums(s, t, r.p_cross, r.p_num_cross);
    sums(t, t, r.q_own, r.q_num_own);
    sums(t, s, r.q_cross, r.q_num_cross);
    return detail::combine_conditional_cs(r);
}

/// Group label of one row in a split of a pooled sample.
enum class Group : std::int8_t { excluded = -1, p = 0, q = 1 };

/// Conditional CS divergence between two groups of a pooled sample, given the
/// pooled x-Gram `k` and the elementwise product `kl` = K .* L. Used by the
/// permutation test and the replay buffer, where many splits share one Gram.
inline double conditional_cs_split(const Matrix& k, const Matrix& kl, std::span<const Group> groups)
{
    const Index n = k.rows();
    detail::require(k.cols() == n && kl.rows() == n && kl.cols() == n, "conditional_cs_split: Gram shape mismatch");
    detail::require(static_cast<Index>(groups.size()) == n, "conditional_cs_split: one label per pooled row required");
    Matrix indicator = Matrix::Zero(n, 2);
    Index m_count = 0;
    Index n_count = 0;
    for (Index i = 0; i < n; ++i) {
        if (groups[static_cast<std::size_t>(i)] == Group::p) {
            indicator(i, 0) = 1.0;
            ++m_count;
        }
        else if (groups[static_cast<std::size_t>(i)] == Group::q) {
            indicator(i, 1) = 1.0;
            ++n_count;
        }
    }
    detail::require(m_count > 0 && n_count > 0, "conditional_cs_split: both groups must be non-empty");
    const Matrix sums = k * indicator;
    const Matrix nums = kl * indicator;

    detail::SplitRowSums r;
    r.p_own.resize(m_count);
    r.p_cross.resize(m_count);
    r.p_num_own.resize(m_count);
    r.p_num_cross.resize(m_count);
    r.q_own.resize(n_count);
    r.q_cross.resize(n_count);
    r.q_num_own.resize(n_count);
    r.q_num_cross.resize(n_count);
    Index jp = 0;
    Index jq = 0;
    for (Index i = 0; i < n; ++i) {
        const Group g = groups[static_cast<std::size_t>(i)];
        if (g == Group::p) {
            r.p_own(jp) = sums(i, 0);
            r.p_cross(jp) = sums(i, 1);
            r.p_num_own(jp) = nums(i, 0);
            r.p_num_cross(jp) = nums(i, 1);
            ++jp;
        }
        else if (g == Group::q) {
            r.q_own(jq) = sums(i, 1);
            r.q_cross(jq) = sums(i, 0);
            r.q_num_own(jq) = nums(i, 1);
            r.q_num_cross(jq) = nums(i, 0);
            ++jq;
        }
    }
    return detail::combine_conditional_cs(r);
}

/// D(p(y1|x); p(y2|x)) when both responses share the conditioning samples x.
inline double conditional_cs_shared_x(const Samples& x, const Samples& y1, const Samples& y2, double width_x,
                                      double width_y)
{
    detail::require(x.rows() == y1.rows() && x.rows() == y2.rows(), "conditional_cs_shared_x: row counts differ");
    detail::require(y1.cols() == y2.cols(), "conditional_cs_shared_x: response dimensions differ");
    const Matrix k = gram(x, width_x);
    const Vector denom = detail::row_sums(k);
    const auto weighted = [&](const Matrix& l) {
        const Vector num = detail::row_sums(k.cwiseProduct(l));
        double acc = 0.0;
        for (Index j = 0; j < num.size(); ++j) {
            acc += num(j) / (denom(j) * denom(j));
        }
        return acc;
    };
    const double first = std::log(weighted(gram(y1, width_y)));
    const double second = std::log(weighted(gram(y2, width_y)));
    const double cross = detail::checked_log(weighted(gram(y2, y1, width_y)), "conditional_cs_shared_x");
    return (first - cross) + (second - cross);
}

/// D(p(y|x1); p(y|x1,x2)): how much x2 adds to the prediction of y given x1.
/// The joint conditioner's Gram uses the product kernel K12 = K1 .* K2.
inline double conditional_cs_nested(const Samples& x1, const Samples& x2, const Samples& y, double width_x1,
                                    double width_x2, double width_y)
{
    detail::require(x1.rows() == x2.rows() && x1.rows() == y.rows(), "conditional_cs_nested: row counts differ");
    const Matrix k1 = gram(x1, width_x1);
    const Matrix k12 = k1.cwiseProduct(gram(x2, width_x2));
    const Matrix l = gram(y, width_y);
    const Vector s1 = detail::row_sums(k1);
    const Vector s12 = detail::row_sums(k12);
    const Vector n1 = detail::row_sums(k1.cwiseProduct(l));
    const Vector n12 = detail::row_sums(k12.cwiseProduct(l));
    double first = 0.0;
    double second = 0.0;
    double cross = 0.0;
    for (Index j = 0; j < s1.size(); ++j) {
        first += n1(j) / (s1(j) * s1(j));
        second += n12(j) / (s12(j) * s12(j));
        cross += n1(j) / (s1(j) * s12(j));
    }
    const double log_cross = detail::checked_log(cross, "conditional_cs_nested");
    return (std::log(first) - log_cross) + (std::log(second) - log_cross);
}

/// Same estimator with precomputed symmetric Grams (K1, K2 of the added conditioner, L).
inline double conditional_cs_nested(const Matrix& k1, const Matrix& k2, const Matrix& l)
{
    detail::require(k1.rows() == k2.rows() && k1.rows() == l.rows(), "conditional_cs_nested: Gram shape mismatch");
    const Index n = k1.rows();
    double first = 0.0;
    double second = 0.0;
    double cross = 0.0;
    for (Index j = 0; j < n; ++j) {
        double s1 = 0.0;
        double s12 = 0.0;
        double n1 = 0.0;
        double n12 = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double a = k1(i, j);
            const double b = a * k2(i, j);
            s1 += a;
            s12 += b;
            n1 += a * l(i, j);
            n12 += b * l(i, j);
        }
        first += n1 / (s1 * s1);
        second += n12 / (s12 * s12);
        cross += n1 / (s1 * s12);
    }
    const double log_cross = detail::checked_log(cross, "conditional_cs_nested");
    return (std::log(first) - log_cross) + (std::log(second) - log_cross);
}

enum class MmdStatistic { v, u };

/// Squared MMD between two sample sets.
inline double mmd(const Samples& ys, const Samples& yt, double width, MmdStatistic statistic = MmdStatistic::v)
{
    detail::require(ys.cols() == yt.cols(), "mmd: dimension mismatch");
    const double m = static_cast<double>(ys.rows());
    const double n = static_cast<double>(yt.rows());
    const Matrix gss = gram(ys, width);
    const Matrix gtt = gram(yt, width);
    const double cross = gram(ys, yt, width).sum() / (m * n);
    if (statistic == MmdStatistic::v) {
        return std::max(0.0, gss.sum() / (m * m) + gtt.sum() / (n * n) - 2.0 * cross);
    }
    detail::require(ys.rows() >= 2 && yt.rows() >= 2, "mmd: the u-statistic needs at least two samples per set");
    const double within_s = (gss.sum() - gss.trace()) / (m * (m - 1.0));
    const double within_t = (gtt.sum() - gtt.trace()) / (n * (n - 1.0));
    return within_s + within_t - 2.0 * cross;
}

struct CmmdConfig {
    double ridge = 1e-3;
    double width_x = 1.0;
    double width_y = 1.0;
};

/// Conditional MMD in trace form with regularized x-Grams K + ridge*I.
inline double conditional_mmd(const PairedDataset& s, const PairedDataset& t, const CmmdConfig& config)
{
    require_same_dims(s, t, "conditional_mmd");
    detail::require(config.ridge > 0.0, "conditional_mmd: ridge must be positive");
    const Matrix ks = gram(s.x(), config.width_x);
    const Matrix kt = gram(t.x(), config.width_x);
    const Matrix ls = gram(s.y(), config.width_y);
    const Matrix lt = gram(t.y(), config.width_y);
    const Matrix kst = gram(s.x(), t.x(), config.width_x);
    const Matrix lts = gram(t.y(), s.y(), config.width_y);

    const Eigen::LDLT<Matrix> solve_s(ks + config.ridge * Matrix::Identity(ks.rows(), ks.rows()));
    const Eigen::LDLT<Matrix> solve_t(kt + config.ridge * Matrix::Identity(kt.rows(), kt.rows()));
    if (solve_s.info() != Eigen::Success || solve_t.info() != Eigen::Success) {
        throw NumericalError("conditional_mmd: regularized Gram factorization failed");
    }
    // K and (K + ridge I)^-1 commute, so tr(K Kr^-1 L Kr^-1) = tr((Kr^-1 K)(Kr^-1 L)).
    const Matrix ks_solved = solve_s.solve(ks);
    const Matrix ls_solved = solve_s.solve(ls);
    const Matrix kt_solved = solve_t.solve(kt);
    const Matrix lt_solved = solve_t.solve(lt);
    // tr(Kst Kt^-1 Lts Ks^-1) = tr((Ks^-1 Kst)(Kt^-1 Lts)).
    const Matrix kst_solved = solve_s.solve(kst);
    const Matrix lts_solved = solve_t.solve(lts);
    if (!ks_solved.allFinite() || !ls_solved.allFinite() || !kt_solved.allFinite() || !lt_solved.allFinite() ||
        !kst_solved.allFinite() || !lts_solved.allFinite()) {
        throw NumericalError("conditional_mmd: linear solve produced non-finite values");
    }
    const double within_s = ks_solved.cwiseProduct(ls_solved.transpose()).sum();
    const double within_t = kt_solved.cwiseProduct(lt_solved.transpose()).sum();
    const double cross = kst_solved.cwiseProduct(lts_solved.transpose()).sum();
    return within_s + within_t - 2.0 * cross;
}

struct KnnConfig {
    int neighbors = 3;
};

struct KnnEstimate {
    double value = 0.0;
    /// Set when a zero neighbor distance had to be floored (duplicate points).
    bool floored = false;
};

namespace detail {

inline constexpr double kDistanceFloor = 1e-12;

/// k-th smallest distance from `point` to rows of `set`, skipping row `skip`.
inline double kth_distance(std::span<const double> point, const Samples& set, int k, Index skip,
                           std::vector<double>& scratch)
{
    scratch.clear();
    for (Index i = 0; i < set.rows(); ++i) {
        if (i != skip) {
            scratch.push_back(squared_distance(point, row_span(set, i)));
        }
    }
    const auto kth = scratch.begin() + (k - 1);
    std::nth_element(scratch.begin(), kth, scratch.end());
    return std::sqrt(*kth);
}

} // namespace detail

/// kNN estimate of KL(p_s || p_t) in the ratio-of-distances form
///   (d/M) sum_i log(nu_k(i) / rho_k(i)) + log(N / (M - 1)).
/// Can be negative at finite sample size.
inline KnnEstimate kl_knn(const Samples& ys, const Samples& yt, const KnnConfig& config)
{
    detail::require(ys.cols() == yt.cols(), "kl_knn: dimension mismatch");
    detail::require(ys.rows() >= 2 && yt.rows() >= 2, "kl_knn: need at least two samples per set");
    detail::require(config.neighbors >= 1, "kl_knn: neighbors must be positive");
    detail::require(config.neighbors < std::min(ys.rows(), yt.rows()), "kl_knn: neighbors must be below the sample count");
    const Index m = ys.rows();
    const double d = static_cast<double>(ys.cols());
    std::vector<double> scratch;
    KnnEstimate out;
    double acc = 0.0;
    for (Index i = 0; i < m; ++i) {
        const auto point = row_span(ys, i);
        double rho = detail::kth_distance(point, ys, config.neighbors, i, scratch);
        double nu = detail::kth_distance(point, yt, config.neighbors, -1, scratch);
        if (rho < detail::kDistanceFloor) {
            rho = detail::kDistanceFloor;
            out.floored = true;
        }
        if (nu < detail::kDistanceFloor) {
            nu = detail::kDistanceFloor;
            out.floored = true;
        }
        acc += std::log(nu / rho);
    }
    out.value = d / static_cast<double>(m) * acc + std::log(static_cast<double>(yt.rows()) / static_cast<double>(m - 1));
    return out;
}

/// Conditional KL by the chain rule: KL on joint (x, y) minus KL on x.
inline KnnEstimate conditional_kl(const PairedDataset& s, const PairedDataset& t, const KnnConfig& config)
{
    require_same_dims(s, t, "conditional_kl");
    const KnnEstimate joint = kl_knn(s.joint(), t.joint(), config);
    const KnnEstimate marginal = kl_knn(s.x(), t.x(), config);
    return {joint.value - marginal.value, joint.floored || marginal.floored};
}

/// Von Neumann (matrix Bregman) divergence tr(S log S - S log R - S + R).
inline double von_neumann(const Matrix& sigma, const Matrix& rho)
{
    detail::require(sigma.rows() == sigma.cols() && rho.rows() == rho.cols() && sigma.rows() == rho.rows(),
                    "von_neumann: matrices must be square and of equal size");
    const auto symmetric = [](const Matrix& m) {
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale;
    };
    detail::require(symmetric(sigma) && symmetric(rho), "von_neumann: inputs must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
    const Eigen::SelfAdjointEigenSolver<Matrix> er(rho);
    if (es.info() != Eigen::Success || er.info() != Eigen::Success) {
        throw NumericalError("von_neumann: eigendecomposition failed");
    }
    if (es.eigenvalues().minCoeff() <= 0.0 || er.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalError("von_neumann: matrices must be positive definite");
    }
    const Vector ls = es.eigenvalues();
    const Vector lr = er.eigenvalues();
    const double s_log_s = (ls.array() * ls.array().log()).sum();
    const Matrix log_rho = er.eigenvectors() * lr.array().log().matrix().asDiagonal() * er.eigenvectors().transpose();
    const double s_log_r = sigma.cwiseProduct(log_rho).sum();
    return s_log_s - s_log_r - sigma.trace() + rho.trace();
}

/// Sample covariances of the joint (x, y) and of x alone, ridge-stabilized by
/// 1e-8 * trace / dim so every spectrum is strictly positive.
struct CovarianceSummary {
    Matrix joint_cov;
    Matrix marginal_cov;

    static Matrix covariance(const Samples& data)
    {
        detail::require(data.rows() >= 2, "covariance: need at least two samples");
        const Eigen::RowVectorXd mean = data.colwise().mean();
        const Samples centered = data.rowwise() - mean;
        Matrix cov = (centered.transpose() * centered) / static_cast<double>(data.rows() - 1);
        cov = 0.5 * (cov + cov.transpose());
        const double dim = static_cast<double>(cov.rows());
        double ridge = 1e-8 * cov.trace() / dim;
        if (!(ridge > 0.0)) {
            ridge = 1e-12;
        }
        cov.diagonal().array() += ridge;
        return cov;
    }

    static CovarianceSummary of(const PairedDataset& data)
    {
        return {covariance(data.joint()), covariance(data.x())};
    }
};

/// Conditional von Neumann divergence D(C_xy^s; C_xy^t) - D(C_x^s; C_x^t).
/// Sees second moments only and may be negative.
inline double conditional_von_neumann(const PairedDataset& s, const PairedDataset& t)
{
    require_same_dims(s, t, "conditional_von_neumann");
    const CovarianceSummary cs = CovarianceSummary::of(s);
    const CovarianceSummary ct = CovarianceSummary::of(t);
    return von_neumann(cs.joint_cov, ct.joint_cov) - von_neumann(cs.marginal_cov, ct.marginal_cov);
}

} // namespace ccs
