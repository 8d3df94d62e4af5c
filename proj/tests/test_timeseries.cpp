#include "ccs/timeseries.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace ccs;
using Catch::Approx;

namespace {

TimeSeries series(std::initializer_list<double> v)
{
    const std::vector<double> values(v);
    return TimeSeries::univariate(values);
}

std::vector<int> planted(int blocks, int size)
{
    std::vector<int> labels;
    for (int b = 0; b < blocks; ++b) {
        labels.insert(labels.end(), static_cast<std::size_t>(size), b);
    }
    return labels;
}

Matrix planted_dissimilarity(const std::vector<int>& labels, double within, double between)
{
    const auto n = static_cast<Index>(labels.size());
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            d(i, j) = i == j ? 0.0 : (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)] ? within : between);
        }
    }
    return d;
}

} // namespace

TEST_CASE("hankel embedding")
{
    const HankelPair h = hankel_embed(series({1, 2, 3, 4, 5}), 2);
    Samples inputs(3, 2);
    inputs << 1, 2, 2, 3, 3, 4;
    CHECK(h.inputs == inputs);
    CHECK(h.targets == column(std::vector<double>{3, 4, 5}));
    CHECK_THROWS_AS(hankel_embed(series({1, 2, 3}), 3), InvalidArgument);

    TimeSeries multi{Samples::Random(6, 2), std::nullopt};
    const HankelPair h1 = hankel_embed(multi, 1);
    CHECK(h1.inputs == multi.values.topRows(5));
    CHECK(h1.targets == multi.values.bottomRows(5));

    TimeSeries big{Samples::Random(100, 3), std::nullopt};
    const HankelPair hb = hankel_embed(big, 10);
    CHECK(hb.inputs.rows() == 90);
    CHECK(hb.inputs.cols() == 30);
    CHECK(hb.targets.rows() == 90);
    CHECK(hb.targets.cols() == 3);

    // overlaying the windows and targets reproduces the series
    Samples rebuilt(100, 3);
    for (Index i = 0; i < hb.inputs.rows(); ++i) {
        for (Index lag = 0; lag < 10; ++lag) {
            rebuilt.row(i + lag) = hb.inputs.block(i, lag * 3, 1, 3);
        }
        rebuilt.row(i + 10) = hb.targets.row(i);
    }
    CHECK(rebuilt == big.values);
}

TEST_CASE("series dissimilarity")
{
    const TimeSeries a = ar2_generate(0.5, 0.0, 150, 1);
    const TimeSeries b = ar2_generate(-0.5, 0.0, 120, 2);
    CHECK(ts_dissimilarity(a, a, 3) == 0.0);
    CHECK(ts_dissimilarity(a, b, 3) == Approx(ts_dissimilarity(b, a, 3)).margin(1e-12));
    CHECK(std::isfinite(ts_dissimilarity(a, b, 3, 1.0, 1.0)));

    int ordered = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const TimeSeries p = ar2_generate(0.8, 0.0, 200, stream_seed(r, 0));
        const TimeSeries q = ar2_generate(0.8, 0.0, 200, stream_seed(r, 1));
        const TimeSeries noise = ar2_generate(0.0, 0.0, 200, stream_seed(r, 2));
        if (ts_dissimilarity(p, q, 1) < ts_dissimilarity(p, noise, 1)) {
            ++ordered;
        }
    }
    CHECK(ordered >= 18);
}

TEST_CASE("pairwise matrix")
{
    const TimeSeries a = ar2_generate(0.5, 0.1, 80, 3);
    const DissimilarityMatrix same = pairwise_matrix({a, a}, PairwiseConfig{2});
    CHECK(same.entries.isZero());

    std::vector<TimeSeries> col;
    std::vector<int> truth;
    const double phis[3][2] = {{0.6, -0.3}, {-0.6, -0.3}, {0.0, 0.7}};
    for (int f = 0; f < 3; ++f) {
        for (int r = 0; r < 10; ++r) {
            col.push_back(ar2_generate(phis[f][0], phis[f][1], 200, stream_seed(9, f * 10 + r)));
            truth.push_back(f);
        }
    }
    const DissimilarityMatrix dm = pairwise_matrix(col, PairwiseConfig{2});
    CHECK(dm.failures.empty());
    CHECK(dm.entries == dm.entries.transpose());
    double within = 0.0, between = 0.0;
    int nw = 0, nb = 0;
    for (Index i = 0; i < 30; ++i) {
        for (Index j = i + 1; j < 30; ++j) {
            if (truth[static_cast<std::size_t>(i)] == truth[static_cast<std::size_t>(j)]) {
                within += dm.entries(i, j);
                ++nw;
            }
            else {
                between += dm.entries(i, j);
                ++nb;
            }
        }
    }
    CHECK(within / nw < between / nb);

    // reordering the collection permutes the matrix
    std::vector<TimeSeries> swapped{col[5], col[0], col[17]};
    const DissimilarityMatrix small = pairwise_matrix({col[0], col[5], col[17]}, PairwiseConfig{2});
    const DissimilarityMatrix perm = pairwise_matrix(swapped, PairwiseConfig{2});
    CHECK(perm.entries(0, 1) == small.entries(1, 0));
    CHECK(perm.entries(0, 2) == small.entries(1, 2));
    CHECK(perm.entries(1, 2) == small.entries(0, 2));

    const ClusterReport rep = cluster_dissimilarity(dm.entries, 3, ClusterMethod::spectral, default_affinity_grid(), 1, &truth);
    CHECK(*rep.nmi >= 0.9);
}

TEST_CASE("affinity conversion")
{
    Matrix d(2, 2);
    d << 0.0, 2.0, 2.0, 0.0;
    const Matrix a = to_affinity(d, 2.0);
    CHECK(a(0, 0) == 1.0);
    CHECK(a(0, 1) == Approx(std::exp(-1.0)));
    CHECK(to_affinity(d * 2.0, 2.0)(0, 1) < a(0, 1));
    CHECK_THROWS_AS(to_affinity(d, 0.0), InvalidArgument);
}

TEST_CASE("spectral clustering on planted partitions")
{
    const std::vector<int> two = planted(2, 5);
    Matrix blocks = Matrix::Zero(10, 10);
    blocks.topLeftCorner(5, 5).setOnes();
    blocks.bottomRightCorner(5, 5).setOnes();
    CHECK(nmi(spectral_cluster(blocks, 2, 1).labels, two) == 1.0);

    const std::vector<int> three = planted(3, 6);
    Matrix noisy(18, 18);
    for (Index i = 0; i < 18; ++i) {
        for (Index j = 0; j < 18; ++j) {
            noisy(i, j) = three[static_cast<std::size_t>(i)] == three[static_cast<std::size_t>(j)] ? 1.0 : 0.01;
        }
    }
    const ClusterAssignment c = spectral_cluster(noisy, 3, 4);
    CHECK(nmi(c.labels, three) == Approx(1.0));
    CHECK(c.labels == spectral_cluster(noisy, 3, 4).labels);

    const Matrix d = planted_dissimilarity(three, 0.1, 1.0);
    CHECK(nmi(spectral_cluster(to_affinity(d, 0.2), 3, 2).labels, three) == Approx(1.0));
    CHECK_THROWS_AS(spectral_cluster(noisy, 1, 0), InvalidArgument);
}

TEST_CASE("k-medoids")
{
    const std::vector<int> three = planted(3, 5);
    const Matrix d = planted_dissimilarity(three, 0.0, 1.0);
    const KmedoidsResult r = kmedoids(d, 3, 7);
    CHECK(nmi(r.assignment.labels, three) == Approx(1.0));
    CHECK(r.cost_history.back() == 0.0);

    const KmedoidsResult all = kmedoids(d + Matrix::Ones(15, 15) - Matrix::Identity(15, 15), 15, 1);
    CHECK(all.cost_history.back() == 0.0);

    Eigen::MatrixXd pts = Eigen::MatrixXd::Random(25, 2);
    Matrix dist(25, 25);
    for (Index i = 0; i < 25; ++i) {
        for (Index j = 0; j < 25; ++j) {
            dist(i, j) = (pts.row(i) - pts.row(j)).norm();
        }
    }
    const KmedoidsResult fit = kmedoids(dist, 4, 3);
    for (std::size_t i = 1; i < fit.cost_history.size(); ++i) {
        CHECK(fit.cost_history[i] <= fit.cost_history[i - 1]);
    }
}

TEST_CASE("normalized mutual information")
{
    const std::vector<int> a{0, 0, 1, 1, 2, 2};
    const std::vector<int> relabeled{5, 5, 3, 3, 9, 9};
    CHECK(nmi(a, a) == Approx(1.0));
    CHECK(nmi(a, relabeled) == Approx(1.0));
    const std::vector<int> single(6, 0);
    CHECK(nmi(single, single) == 1.0);
    CHECK(nmi(single, a) == 0.0);
    CHECK_THROWS_AS(nmi(a, std::vector<int>{0, 1, 2}), InvalidArgument);

    Rng rng(2);
    double mean = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> u(1000), v(1000);
        for (int i = 0; i < 1000; ++i) {
            u[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(rng, 2));
            v[static_cast<std::size_t>(i)] = static_cast<int>(uniform_index(rng, 2));
        }
        mean += nmi(u, v) / 20.0;
    }
    CHECK(mean < 0.05);
}

TEST_CASE("ucr parsing")
{
    std::istringstream comma("2,1.0,2.0,3.0\n1,4,5,6\n");
    const auto parsed = parse_ucr(comma, "mem");
    REQUIRE(parsed.size() == 2);
    CHECK(*parsed[0].label == 2);
    CHECK(parsed[0].values == column(std::vector<double>{1, 2, 3}));

    std::istringstream tabs("1.0000000e+00\t0.5\t0.25\n");
    CHECK(*parse_ucr(tabs, "mem").front().label == 1);

    std::istringstream spaces("  3   1.5  2.5 3.5\n");
    CHECK(parse_ucr(spaces, "mem").front().length() == 3);

    std::istringstream empty("");
    CHECK_THROWS_AS(parse_ucr(empty, "mem"), DataError);

    std::istringstream ragged("1,1,2,3\n2,1,2\n");
    try {
        parse_ucr(ragged, "file.tsv");
        FAIL("ragged input accepted");
    }
    catch (const DataError& e) {
        CHECK(std::string(e.what()).find("file.tsv:2") != std::string::npos);
    }

    std::istringstream text("1,1,abc,3\n");
    CHECK_THROWS_AS(parse_ucr(text, "mem"), DataError);
    std::istringstream frac("1.5,1,2,3\n");
    CHECK_THROWS_AS(parse_ucr(frac, "mem"), DataError);

    std::istringstream semi("4;1;2\n");
    CHECK(*parse_ucr(semi, "mem", UcrOptions{';'}).front().label == 4);
    CHECK_THROWS_AS(load_ucr("/nonexistent/file.tsv"), DataError);
}
