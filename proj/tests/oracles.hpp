#pragma once

// Deliberately naive index-by-index transcriptions of the estimator formulas.
// They share nothing with the library beyond the Samples container, so an
// agreement between both routes checks the library's algebra.

#include "ccs/random.hpp"
#include "ccs/types.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

using ccs::Index;
using ccs::Matrix;
using ccs::Samples;

inline double k(const Samples& a, Index i, const Samples& b, Index j, double w)
{
    double d2 = 0.0;
    for (Index c = 0; c < a.cols(); ++c) {
        d2 += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
    }
    return std::exp(-d2 / (2.0 * w * w));
}

inline Matrix gram(const Samples& a, const Samples& b, double w)
{
    Matrix g(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < b.rows(); ++j) {
            g(i, j) = k(a, i, b, j, w);
        }
    }
    return g;
}

inline double cs(const Samples& ys, const Samples& yt, double w)
{
    const double m = static_cast<double>(ys.rows());
    const double n = static_cast<double>(yt.rows());
    double ss = 0.0, tt = 0.0, st = 0.0;
    for (Index i = 0; i < ys.rows(); ++i) {
        for (Index j = 0; j < ys.rows(); ++j) {
            ss += k(ys, i, ys, j, w);
        }
    }
    for (Index i = 0; i < yt.rows(); ++i) {
        for (Index j = 0; j < yt.rows(); ++j) {
            tt += k(yt, i, yt, j, w);
        }
    }
    for (Index i = 0; i < ys.rows(); ++i) {
        for (Index j = 0; j < yt.rows(); ++j) {
            st += k(ys, i, yt, j, w);
        }
    }
    return std::log(ss / (m * m)) + std::log(tt / (n * n)) - 2.0 * std::log(st / (m * n));
}

/// Four-term conditional CS estimate, written out sum by sum.
inline double conditional_cs(const Samples& xs, const Samples& ys, const Samples& xt, const Samples& yt, double wx,
                             double wy)
{
    const Index m = xs.rows();
    const Index n = xt.rows();
    double t1 = 0.0;
    for (Index j = 0; j < m; ++j) {
        double num = 0.0, den = 0.0;
        for (Index i = 0; i < m; ++i) {
            num += k(xs, j, xs, i, wx) * k(ys, j, ys, i, wy);
            den += k(xs, j, xs, i, wx);
        }
        t1 += num / (den * den);
    }
    double t2 = 0.0;
    for (Index j = 0; j < n; ++j) {
        double num = 0.0, den = 0.0;
        for (Index i = 0; i < n; ++i) {
            num += k(xt, j, xt, i, wx) * k(yt, j, yt, i, wy);
            den += k(xt, j, xt, i, wx);
        }
        t2 += num / (den * den);
    }
    double t3 = 0.0;
    for (Index j = 0; j < m; ++j) {
        double num = 0.0, own = 0.0, cross = 0.0;
        for (Index i = 0; i < n; ++i) {
            num += k(xs, j, xt, i, wx) * k(ys, j, yt, i, wy);
            cross += k(xs, j, xt, i, wx);
        }
        for (Index i = 0; i < m; ++i) {
            own += k(xs, j, xs, i, wx);
        }
        t3 += num / (own * cross);
    }
    double t4 = 0.0;
    for (Index j = 0; j < n; ++j) {
        double num = 0.0, own = 0.0, cross = 0.0;
        for (Index i = 0; i < m; ++i) {
            num += k(xt, j, xs, i, wx) * k(yt, j, ys, i, wy);
            cross += k(xt, j, xs, i, wx);
        }
        for (Index i = 0; i < n; ++i) {
            own += k(xt, j, xt, i, wx);
        }
        t4 += num / (cross * own);
    }
    return std::log(t1) + std::log(t2) - std::log(t3) - std::log(t4);
}

/// Same estimate assembled as log tr(L C) terms with explicit weight matrices
/// C1..C4 built from the x-Grams.
inline double conditional_cs_weight_matrices(const Samples& xs, const Samples& ys, const Samples& xt,
                                             const Samples& yt, double wx, double wy)
{
    const Matrix kp = gram(xs, xs, wx), kq = gram(xt, xt, wx);
    const Matrix kpq = gram(xs, xt, wx), kqp = gram(xt, xs, wx);
    const Matrix lp = gram(ys, ys, wy), lq = gram(yt, yt, wy);
    const Matrix lpq = gram(ys, yt, wy), lqp = gram(yt, ys, wy);
    const Index m = xs.rows(), n = xt.rows();
    const Eigen::VectorXd dp = kp.rowwise().sum(), dq = kq.rowwise().sum();
    const Eigen::VectorXd dpq = kpq.rowwise().sum(), dqp = kqp.rowwise().sum();
    Matrix c1(m, m), c2(n, n), c3(n, m), c4(m, n);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            c1(i, j) = kp(j, i) / (dp(j) * dp(j));
        }
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            c2(i, j) = kq(j, i) / (dq(j) * dq(j));
        }
    }
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < m; ++j) {
            c3(i, j) = kpq(j, i) / (dp(j) * dpq(j));
        }
    }
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < n; ++j) {
            c4(i, j) = kqp(j, i) / (dqp(j) * dq(j));
        }
    }
    return std::log((lp * c1).trace()) + std::log((lq * c2).trace()) - std::log((lpq * c3).trace()) -
           std::log((lqp * c4).trace());
}

inline double shared_x(const Samples& x, const Samples& y1, const Samples& y2, double wx, double wy)
{
    const Index n = x.rows();
    double a = 0.0, b = 0.0, c = 0.0;
    for (Index j = 0; j < n; ++j) {
        double den = 0.0, na = 0.0, nb = 0.0, nc = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double kji = k(x, j, x, i, wx);
            den += kji;
            na += kji * k(y1, j, y1, i, wy);
            nb += kji * k(y2, j, y2, i, wy);
            nc += kji * k(y2, j, y1, i, wy);
        }
        a += na / (den * den);
        b += nb / (den * den);
        c += nc / (den * den);
    }
    return std::log(a) + std::log(b) - 2.0 * std::log(c);
}

inline double nested(const Samples& x1, const Samples& x2, const Samples& y, double w1, double w2, double wy)
{
    const Index n = x1.rows();
    double a = 0.0, b = 0.0, c = 0.0;
    for (Index j = 0; j < n; ++j) {
        double d1 = 0.0, d12 = 0.0, na = 0.0, nb = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double k1 = k(x1, j, x1, i, w1);
            const double k12 = k1 * k(x2, j, x2, i, w2);
            const double l = k(y, j, y, i, wy);
            d1 += k1;
            d12 += k12;
            na += k1 * l;
            nb += k12 * l;
        }
        a += na / (d1 * d1);
        b += nb / (d12 * d12);
        c += na / (d1 * d12);
    }
    return std::log(a) + std::log(b) - 2.0 * std::log(c);
}

inline double mmd_v(const Samples& ys, const Samples& yt, double w)
{
    const double m = static_cast<double>(ys.rows()), n = static_cast<double>(yt.rows());
    double ss = 0.0, tt = 0.0, st = 0.0;
    for (Index i = 0; i < ys.rows(); ++i)
        for (Index j = 0; j < ys.rows(); ++j) ss += k(ys, i, ys, j, w);
    for (Index i = 0; i < yt.rows(); ++i)
        for (Index j = 0; j < yt.rows(); ++j) tt += k(yt, i, yt, j, w);
    for (Index i = 0; i < ys.rows(); ++i)
        for (Index j = 0; j < yt.rows(); ++j) st += k(ys, i, yt, j, w);
    return ss / (m * m) + tt / (n * n) - 2.0 * st / (m * n);
}

inline double mmd_u(const Samples& ys, const Samples& yt, double w)
{
    const double m = static_cast<double>(ys.rows()), n = static_cast<double>(yt.rows());
    double ss = 0.0, tt = 0.0, st = 0.0;
    for (Index i = 0; i < ys.rows(); ++i)
        for (Index j = 0; j < ys.rows(); ++j)
            if (i != j) ss += k(ys, i, ys, j, w);
    for (Index i = 0; i < yt.rows(); ++i)
        for (Index j = 0; j < yt.rows(); ++j)
            if (i != j) tt += k(yt, i, yt, j, w);
    for (Index i = 0; i < ys.rows(); ++i)
        for (Index j = 0; j < yt.rows(); ++j) st += k(ys, i, yt, j, w);
    return ss / (m * (m - 1)) + tt / (n * (n - 1)) - 2.0 * st / (m * n);
}

/// Conditional MMD with explicit inverses of the regularized Grams.
inline double cmmd(const Samples& xs, const Samples& ys, const Samples& xt, const Samples& yt, double wx, double wy,
                   double ridge)
{
    const Matrix ks = gram(xs, xs, wx), kt = gram(xt, xt, wx), kst = gram(xs, xt, wx);
    const Matrix ls = gram(ys, ys, wy), lt = gram(yt, yt, wy), lts = gram(yt, ys, wy);
    const Matrix ks_inv = (ks + ridge * Matrix::Identity(ks.rows(), ks.rows())).inverse();
    const Matrix kt_inv = (kt + ridge * Matrix::Identity(kt.rows(), kt.rows())).inverse();
    return (ks * ks_inv * ls * ks_inv).trace() + (kt * kt_inv * lt * kt_inv).trace() -
           2.0 * (kst * kt_inv * lts * ks_inv).trace();
}

inline Samples random_samples(ccs::Rng& rng, Index rows, Index cols, double scale = 1.0, double shift = 0.0)
{
    Samples s(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) {
            s(i, j) = shift + scale * ccs::standard_normal(rng);
        }
    }
    return s;
}

} // namespace oracle
