#include <doctest.h>

#include <cmath>
#include <random>

#include "qpcd/embedding.hpp"

using namespace qpcd;

namespace {

AnnotatedSeries series_of(std::vector<double> samples, double rate = 100.0) {
    AnnotatedSeries s;
    s.samples = std::move(samples);
    s.sample_rate = rate;
    return s;
}

}  // namespace

TEST_CASE("embedding transcribes delayed coordinates") {
    AnnotatedSeries s = series_of({1, 2, 3, 4});
    PointCloud cloud = sliding_window_embed(s, {1, 1, 1});
    REQUIRE(cloud.size() == 3);
    CHECK(cloud.dim() == 2);
    CHECK(cloud.points(0, 0) == 1);
    CHECK(cloud.points(0, 1) == 2);
    CHECK(cloud.points(1, 0) == 2);
    CHECK(cloud.points(1, 1) == 3);
    CHECK(cloud.points(2, 0) == 3);
    CHECK(cloud.points(2, 1) == 4);
    CHECK(cloud.source_index == std::vector<std::size_t>{0, 1, 2});
    CHECK(cloud.embed_tail == 1);
}

TEST_CASE("embedding honours stride and step") {
    AnnotatedSeries s = series_of({0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    PointCloud cloud = sliding_window_embed(s, {2, 3, 2});
    // spans 0..6, points at t = 0 and t = 2 only (t = 4 needs sample 10)
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points(0, 0) == 0);
    CHECK(cloud.points(0, 1) == 3);
    CHECK(cloud.points(0, 2) == 6);
    CHECK(cloud.points(1, 0) == 2);
    CHECK(cloud.points(1, 2) == 8);
    CHECK(cloud.source_index == std::vector<std::size_t>{0, 2});
}

TEST_CASE("embedding of a constant series collapses to one point") {
    AnnotatedSeries s = series_of(std::vector<double>(50, 3.25));
    PointCloud cloud = sliding_window_embed(s, {4, 2, 1});
    for (std::size_t k = 1; k < cloud.size(); ++k)
        CHECK((cloud.points.row(static_cast<Eigen::Index>(k)) - cloud.points.row(0)).norm() == 0.0);
}

TEST_CASE("embedding rejects too-short series") {
    AnnotatedSeries s = series_of({1, 2, 3});
    CHECK_THROWS(sliding_window_embed(s, {3, 1, 1}));
}

TEST_CASE("noiseless periodic cloud closes into a loop") {
    const std::size_t period = 40;
    AnnotatedSeries s = series_of({});
    for (std::size_t i = 0; i < 400; ++i)
        s.samples.push_back(std::sin(2.0 * M_PI * static_cast<double>(i % period) / period));
    s.sample_rate = 100.0;
    EmbedParams p{period - 1, 1, 1};
    PointCloud cloud = sliding_window_embed(s, p);
    // direct evaluation of the embedding map at t and t + period
    for (std::size_t t = 0; t + period < cloud.size(); ++t) {
        double dist = (cloud.points.row(static_cast<Eigen::Index>(t)) -
                       cloud.points.row(static_cast<Eigen::Index>(t + period)))
                          .norm();
        CHECK(dist <= 1e-9);
    }
}

TEST_CASE("embedding is shift equivariant") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    AnnotatedSeries s = series_of({});
    for (int i = 0; i < 200; ++i) s.samples.push_back(nd(rng));
    EmbedParams p{5, 2, 1};
    PointCloud full = sliding_window_embed(s, p);

    AnnotatedSeries shifted = s;
    shifted.samples.erase(shifted.samples.begin(), shifted.samples.begin() + 7);
    PointCloud tail = sliding_window_embed(shifted, p);
    for (std::size_t k = 0; k < tail.size(); ++k)
        CHECK((tail.points.row(static_cast<Eigen::Index>(k)) -
               full.points.row(static_cast<Eigen::Index>(k + 7)))
                  .norm() == 0.0);
}

TEST_CASE("pca recovers a line through the data") {
    Eigen::Vector3d dir(2.0, -1.0, 0.5);
    dir.normalize();
    PointCloud cloud;
    cloud.points.resize(9, 3);
    cloud.source_index.resize(9);
    double var_acc = 0.0;
    for (int k = 0; k < 9; ++k) {
        const double c = static_cast<double>(k - 4);
        cloud.points.row(k) = (c * dir).transpose();
        cloud.source_index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(k);
        var_acc += c * c;
    }
    PcaModel model = pca_fit(cloud, 1);
    Eigen::Vector3d comp = model.components.col(0);
    CHECK(std::abs(std::abs(comp.dot(dir)) - 1.0) <= 1e-9);
    CHECK(comp(0) > 0.0);  // sign convention
    CHECK(model.explained_variance(0) == doctest::Approx(var_acc / 8.0).epsilon(1e-9));

    PointCloud proj = pca_project(model, cloud);
    for (int k = 0; k < 9; ++k)
        CHECK(std::abs(proj.points(k, 0)) == doctest::Approx(std::abs(k - 4)).epsilon(1e-9));
}

TEST_CASE("pca on an isotropic cloud finds unit variances") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    PointCloud cloud;
    const int n = 60000;
    cloud.points.resize(n, 3);
    cloud.source_index.resize(n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < 3; ++j) cloud.points(k, j) = nd(rng);
        cloud.source_index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(k);
    }
    PcaModel model = pca_fit(cloud, 3);
    for (int j = 0; j < 3; ++j) CHECK(model.explained_variance(j) == doctest::Approx(1.0).epsilon(0.1));
    // components orthonormal
    Eigen::MatrixXd gram = model.components.transpose() * model.components;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-9);
}

TEST_CASE("full-rank pca preserves trace and distances") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> nd;
    PointCloud cloud;
    cloud.points.resize(40, 4);
    cloud.source_index.resize(40);
    for (int k = 0; k < 40; ++k) {
        for (int j = 0; j < 4; ++j) cloud.points(k, j) = nd(rng) * (j + 1);
        cloud.source_index[static_cast<std::size_t>(k)] = static_cast<std::size_t>(2 * k);
    }
    PcaModel model = pca_fit(cloud, 4);
    Eigen::MatrixXd centered = cloud.points.rowwise() - cloud.points.colwise().mean();
    Eigen::MatrixXd cov = centered.transpose() * centered / (cloud.points.rows() - 1.0);
    CHECK(model.explained_variance.sum() == doctest::Approx(cov.trace()).epsilon(1e-9));
    for (int j = 1; j < 4; ++j)
        CHECK(model.explained_variance(j) <= model.explained_variance(j - 1) + 1e-12);

    PointCloud proj = pca_project(model, cloud);
    CHECK(proj.source_index == cloud.source_index);
    for (int i = 0; i < 10; ++i)
        for (int j = i + 1; j < 10; ++j) {
            const double orig = (cloud.points.row(i) - cloud.points.row(j)).norm();
            const double mapped = (proj.points.row(i) - proj.points.row(j)).norm();
            CHECK(mapped == doctest::Approx(orig).epsilon(1e-9));
        }

    // the fitted mean projects to the origin
    PointCloud mean_cloud;
    mean_cloud.points = cloud.points.colwise().mean();
    mean_cloud.source_index = {0};
    PointCloud mean_proj = pca_project(model, mean_cloud);
    CHECK(mean_proj.points.row(0).norm() <= 1e-9);
}

TEST_CASE("pca first component beats random directions") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> nd;
    PointCloud cloud;
    cloud.points.resize(5, 3);
    cloud.source_index = {0, 1, 2, 3, 4};
    for (int k = 0; k < 5; ++k)
        for (int j = 0; j < 3; ++j) cloud.points(k, j) = nd(rng);
    PcaModel model = pca_fit(cloud, 1);

    Eigen::MatrixXd centered = cloud.points.rowwise() - cloud.points.colwise().mean();
    auto variance_along = [&](const Eigen::Vector3d& u) {
        Eigen::VectorXd proj = centered * u;
        return proj.squaredNorm() / (cloud.points.rows() - 1.0);
    };
    const double best = variance_along(model.components.col(0));
    for (int trial = 0; trial < 1000; ++trial) {
        Eigen::Vector3d u(nd(rng), nd(rng), nd(rng));
        u.normalize();
        CHECK(best >= variance_along(u) - 1e-12);
    }
}

TEST_CASE("degenerate directions receive zero variance without crashing") {
    PointCloud cloud;
    cloud.points = Eigen::MatrixXd::Zero(6, 3);
    cloud.source_index = {0, 1, 2, 3, 4, 5};
    PcaModel model = pca_fit(cloud, 3);
    CHECK(model.explained_variance.maxCoeff() <= 1e-12);
    Eigen::MatrixXd gram = model.components.transpose() * model.components;
    CHECK((gram - Eigen::MatrixXd::Identity(3, 3)).norm() <= 1e-9);
}

TEST_CASE("pca guards") {
    PointCloud cloud;
    cloud.points = Eigen::MatrixXd::Zero(1, 3);
    cloud.source_index = {0};
    CHECK_THROWS(pca_fit(cloud, 1));
    cloud.points = Eigen::MatrixXd::Zero(5, 3);
    cloud.source_index = {0, 1, 2, 3, 4};
    CHECK_THROWS(pca_fit(cloud, 4));
}
