#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "stressmkl/clustering.hpp"
#include "stressmkl/error.hpp"
#include "stressmkl/rng.hpp"

using namespace stressmkl;

namespace {

WindowInstance window(const std::string& drive, double start, const std::vector<double>& head,
                      StressLabel label = StressLabel::H) {
    WindowInstance w;
    w.drive_id = drive;
    w.start = start;
    w.label = label;
    for (std::size_t i = 0; i < head.size(); ++i) {
        if (i < kEdaFeatureCount)
            w.eda[i] = head[i];
        else
            w.hr[i - kEdaFeatureCount] = head[i];
    }
    return w;
}

Matrix block_matrix(const std::vector<int>& groups, double eps) {
    const auto n = static_cast<Eigen::Index>(groups.size());
    Matrix W(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) W(i, j) = groups[i] == groups[j] ? 1.0 : eps;
    return W;
}

}  // namespace

TEST_CASE("profile is the mean of the drive's H windows") {
    const std::vector<WindowInstance> one{window("d", 0, {0.1, 0.2, 0.3})};
    const auto p1 = profile_vector(one);
    CHECK(p1.drive_id == "d");
    CHECK(p1.p.size() == 14);
    CHECK(p1.p[0] == 0.1);
    CHECK(p1.p[2] == 0.3);

    const std::vector<WindowInstance> two{window("d", 0, {0.2, 0.4}), window("d", 15, {0.4, 0.0})};
    const auto p2 = profile_vector(two);
    CHECK(p2.p[0] == doctest::Approx(0.3));
    CHECK(p2.p[1] == doctest::Approx(0.2));

    const std::vector<WindowInstance> three{window("d", 0, {1, 0}), window("d", 15, {0, 1}), window("d", 30, {1, 1})};
    const auto p3 = profile_vector(three);
    CHECK(p3.p[0] == doctest::Approx(2.0 / 3.0));
    CHECK(p3.p[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("profile errors") {
    try {
        (void)profile_vector(std::vector<WindowInstance>{});
        FAIL("expected a missing-profile error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::MissingProfile);
    }
    CHECK_THROWS_AS(profile_vector(std::vector<WindowInstance>{window("d", 0, {0.1}, StressLabel::L)}), Error);
    CHECK_THROWS_AS(profile_vector(std::vector<WindowInstance>{window("a", 0, {0.1}), window("b", 0, {0.1})}), Error);
}

TEST_CASE("similarity matrix values") {
    std::vector<ProfileVector> same(3, ProfileVector{"d", Vector::Constant(14, 0.4)});
    CHECK(similarity_matrix(same).isApprox(Matrix::Ones(3, 3)));

    std::vector<ProfileVector> pair{{"a", Vector::Zero(14)}, {"b", Vector::Zero(14)}};
    pair[1].p[0] = 1.0;
    pair[1].p[1] = 3.0;
    const Matrix W = similarity_matrix(pair, 0.1);
    CHECK(W(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));

    Rng rng(1);
    std::vector<ProfileVector> many;
    for (int e = 0; e < 9; ++e) {
        Vector p(14);
        for (int i = 0; i < 14; ++i) p[i] = rng.uniform();
        many.push_back({"d" + std::to_string(e), p});
    }
    const Matrix M = similarity_matrix(many);
    CHECK((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(M.diagonal().isApprox(Vector::Ones(9)));
}

TEST_CASE("laplacian rows sum to zero") {
    const Matrix W = block_matrix({0, 0, 1, 1, 1}, 0.01);
    const Matrix L = graph_laplacian(W);
    CHECK(L.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("spectral embedding solves the generalized problem") {
    const Matrix W = block_matrix({0, 0, 0, 1, 1, 2}, 0.05);
    const auto emb = spectral_embedding(W, 3);
    const Matrix L = graph_laplacian(W);
    const Matrix G = W.rowwise().sum().asDiagonal();
    CHECK(std::abs(emb.eigenvalues[0]) <= 1e-10);
    for (int k = 0; k < 3; ++k) {
        const Vector u = emb.vectors.col(k);
        CHECK((L * u - emb.eigenvalues[k] * G * u).norm() <= 1e-9 * std::max(1.0, u.norm()));
    }
    CHECK(emb.eigenvalues[0] <= emb.eigenvalues[1]);
    CHECK(emb.eigenvalues[1] <= emb.eigenvalues[2]);
}

TEST_CASE("single task assigns every drive to one group") {
    const Matrix W = block_matrix({0, 1, 0, 1}, 1e-3);
    CHECK(spectral_cluster(W, 1, 7) == std::vector<int>{0, 0, 0, 0});
}

TEST_CASE("planted blocks are recovered and match the brute-force cut") {
    const std::vector<int> groups{0, 1, 0, 0, 1, 1, 0};
    const Matrix W = block_matrix(groups, 1e-6);
    const auto labels = spectral_cluster(W, 2, 3);
    CHECK(oracle::canonical(labels) == oracle::canonical(groups));
    CHECK(oracle::canonical(labels) == oracle::canonical(oracle::min_normalized_cut(W, 2)));
}

TEST_CASE("outlier forms a singleton cluster") {
    std::vector<ProfileVector> p{{"a", Vector::Constant(14, 0.5)}, {"b", Vector::Constant(14, 0.52)},
                                 {"c", Vector::Constant(14, 0.5)}};
    p[2].p.head(9).setConstant(1.0);
    const Matrix W = similarity_matrix(p, 0.1);
    const auto labels = spectral_cluster(W, 2, 1);
    CHECK(oracle::canonical(labels) == std::vector<int>{0, 0, 1});
    CHECK(oracle::canonical(labels) == oracle::canonical(oracle::min_normalized_cut(W, 2)));
}

TEST_CASE("isolated vertices are rejected") {
    Matrix W = block_matrix({0, 0, 1}, 0.0);
    W(2, 2) = 0.0;
    try {
        (void)spectral_cluster(W, 2, 1);
        FAIL("expected a degenerate-graph error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DegenerateGraph);
    }
}

TEST_CASE("k-means with k equal to the point count") {
    Matrix X(4, 2);
    X << 0, 0, 1, 0, 0, 1, 5, 5;
    const auto r = kmeans(X, 4, 2);
    CHECK(r.wcss == 0.0);
    CHECK(r.labels == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("k-means recovers two 1-D groups") {
    Matrix X(4, 1);
    X << 0, 10, 0.1, 10.1;
    const auto r = kmeans(X, 2, 5);
    double best = 0.0;
    const auto truth = oracle::min_wcss(X, 2, &best);
    CHECK(r.labels == oracle::canonical(truth));
    CHECK(r.labels == std::vector<int>{0, 1, 0, 1});
    CHECK(r.wcss == doctest::Approx(best));
}

TEST_CASE("k-means errors") {
    const Matrix same = Matrix::Constant(5, 2, 0.3);
    try {
        (void)kmeans(same, 2, 1);
        FAIL("expected a clustering failure");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::ClusteringFailure);
    }
    CHECK_THROWS_AS(kmeans(Matrix::Zero(2, 1), 3, 1), Error);
}

TEST_CASE("k-means matches brute force on random small sets") {
    Rng rng(11);
    int agree = 0;
    for (int rep = 0; rep < 40; ++rep) {
        Matrix X(7, 2);
        for (int i = 0; i < 7; ++i) X.row(i) << rng.uniform(), rng.uniform();
        double best = 0.0;
        (void)oracle::min_wcss(X, 3, &best);
        const auto r = kmeans(X, 3, static_cast<std::uint64_t>(rep));
        if (r.wcss <= best + 1e-12) ++agree;
        CHECK(r.wcss >= best - 1e-12);
    }
    CHECK(agree >= 36);
}

TEST_CASE("assign_tasks clusters H profiles and routes H-less drives") {
    std::vector<WindowInstance> train;
    for (int d = 0; d < 6; ++d) {
        const std::string id = "d" + std::to_string(d);
        const double base = d % 2 == 0 ? 0.2 : 0.8;
        for (int k = 0; k < 4; ++k) {
            train.push_back(window(id, 15.0 * k, {base + 0.01 * k, base}, StressLabel::H));
            train.push_back(window(id, 100 + 15.0 * k, {base, base}, StressLabel::L));
        }
    }
    train.push_back(window("lonely", 0, {0.79, 0.8}, StressLabel::L));
    ClusteringOptions opts;
    opts.tasks = 2;
    opts.seed = 4;
    const auto r = assign_tasks(train, opts);
    CHECK(r.profiles.size() == 6);
    CHECK(r.fallback_drives == std::vector<std::string>{"lonely"});
    CHECK(r.assignment.task("d0") == r.assignment.task("d2"));
    CHECK(r.assignment.task("d1") == r.assignment.task("d3"));
    CHECK(r.assignment.task("d0") != r.assignment.task("d1"));
    CHECK(r.assignment.task("lonely") == r.assignment.task("d1"));
    try {
        (void)r.assignment.task("missing");
        FAIL("expected an unassigned-drive error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::UnassignedDrive);
    }

    const auto again = assign_tasks(train, opts);
    CHECK(again.assignment.task_of == r.assignment.task_of);

    const auto order = cluster_order(r);
    REQUIRE(order.size() == 6);
    for (std::size_t i = 1; i < order.size(); ++i)
        CHECK(r.assignment.task(r.profiles[order[i - 1]].drive_id) <= r.assignment.task(r.profiles[order[i]].drive_id));

    opts.tasks = 7;
    CHECK_THROWS_AS(assign_tasks(train, opts), Error);
}
