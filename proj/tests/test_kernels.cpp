#include "ccs/kernels.hpp"
#include "oracles.hpp"

#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace ccs;
using Catch::Approx;

TEST_CASE("gaussian kernel values")
{
    const std::vector<double> u{0.0, 0.0};
    const std::vector<double> v{3.0, 4.0};
    CHECK(gaussian_kernel(u, u, 1.0) == 1.0);
    CHECK(gaussian_kernel(u, v, 5.0) == Approx(std::exp(-0.5)).epsilon(1e-15));
    const std::vector<double> w{std::sqrt(2.0), 0.0};
    CHECK(gaussian_kernel(u, w, 1.0) == Approx(std::exp(-1.0)).epsilon(1e-14));
    const std::vector<double> short_vec{1.0};
    CHECK_THROWS_AS(gaussian_kernel(u, short_vec, 1.0), InvalidArgument);
    CHECK_THROWS_AS(gaussian_kernel(u, v, 0.0), InvalidArgument);
}

TEST_CASE("kernel values lie in (0, 1]")
{
    Rng rng(3);
    for (int rep = 0; rep < 200; ++rep) {
        const Samples a = oracle::random_samples(rng, 2, 3, 2.0);
        const double val = gaussian_kernel(row_span(a, 0), row_span(a, 1), 0.7);
        CHECK(val > 0.0);
        CHECK(val < 1.0);
    }
}

TEST_CASE("gram matches the naive double loop")
{
    Rng rng(11);
    const Samples a = oracle::random_samples(rng, 4, 2);
    const Samples b = oracle::random_samples(rng, 3, 2);
    const Matrix g = gram(a, b, 0.8);
    const Matrix ref = oracle::gram(a, b, 0.8);
    REQUIRE(g.rows() == 4);
    REQUIRE(g.cols() == 3);
    CHECK((g - ref).cwiseAbs().maxCoeff() < 1e-14);

    Samples one(1, 2);
    one << 0.3, -1.0;
    CHECK(gram(one, one, 1.0)(0, 0) == 1.0);

    CHECK_THROWS_AS(gram(Samples(0, 2), b, 1.0), InvalidArgument);
    CHECK_THROWS_AS(gram(a, Samples::Zero(3, 3), 1.0), InvalidArgument);
}

TEST_CASE("self gram is symmetric PSD with unit diagonal")
{
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Samples a = oracle::random_samples(rng, 12, 3);
        const Matrix g = gram(a, 0.9);
        CHECK(g == g.transpose());
        CHECK((g.diagonal().array() == 1.0).all());
        CHECK(g == gram(a, a, 0.9));
        const Eigen::SelfAdjointEigenSolver<Matrix> es(g);
        CHECK(es.eigenvalues().minCoeff() >= -1e-8);
    }
}

TEST_CASE("per-coordinate widths form a product kernel")
{
    Rng rng(8);
    const Samples a = oracle::random_samples(rng, 5, 2);
    const Samples b = oracle::random_samples(rng, 4, 2);
    Vector widths(2);
    widths << 0.5, 2.0;
    const Matrix g = gram(a, b, widths);
    for (Index i = 0; i < 5; ++i) {
        for (Index j = 0; j < 4; ++j) {
            const double d0 = (a(i, 0) - b(j, 0)) / 0.5;
            const double d1 = (a(i, 1) - b(j, 1)) / 2.0;
            CHECK(g(i, j) == Approx(std::exp(-0.5 * (d0 * d0 + d1 * d1))).epsilon(1e-13));
        }
    }
}

TEST_CASE("median bandwidth")
{
    Samples two(2, 1);
    two << 0.0, 1.0;
    CHECK(median_bandwidth(two) == 1.0);
    Samples three(3, 1);
    three << 0.0, 1.0, 3.0;
    CHECK(median_bandwidth(three) == 2.0);
    Samples four(4, 1);
    four << 0.0, 1.0, 3.0, 3.0;
    // nonzero distances {1, 3, 3, 2, 2}; the duplicate pair is ignored
    CHECK(median_bandwidth(four) == 2.0);
    CHECK_THROWS_AS(median_bandwidth(Samples::Ones(3, 2)), InvalidArgument);
    CHECK_THROWS_AS(median_bandwidth(Samples::Ones(1, 2)), InvalidArgument);

    Rng rng(2);
    const Samples a = oracle::random_samples(rng, 30, 2);
    Samples rev = a.colwise().reverse();
    CHECK(median_bandwidth(a) == median_bandwidth(rev));

    KernelConfig fixed{0.4, BandwidthMode::fixed};
    CHECK(resolve_width(fixed, a) == 0.4);
    KernelConfig med{1.0, BandwidthMode::median_heuristic};
    CHECK(resolve_width(med, a) == median_bandwidth(a));
}

TEST_CASE("product kernel identity")
{
    const std::vector<double> x0{0.0}, x1{1.0}, y0{0.0}, y2{2.0};
    auto [joint, product] = product_kernel_check(x0, x1, y0, y2, 1.0);
    CHECK(joint == Approx(std::exp(-2.5)).epsilon(1e-14));
    CHECK(product == Approx(std::exp(-2.5)).epsilon(1e-14));
    auto [same_joint, same_product] = product_kernel_check(x0, x0, y0, y0, 1.0);
    CHECK(same_joint == 1.0);
    CHECK(same_product == 1.0);

    Rng rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        const Samples v = oracle::random_samples(rng, 4, 3);
        auto [j, p] = product_kernel_check(row_span(v, 0), row_span(v, 1), row_span(v, 2), row_span(v, 3), 1.3);
        CHECK(std::abs(j - p) < 1e-14);
    }
}
