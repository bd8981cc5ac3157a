#include "qpcd/embedding.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qpcd {

PointCloud sliding_window_embed(const AnnotatedSeries& series, const EmbedParams& p) {
    if (p.s == 0 || p.dt == 0) throw std::invalid_argument("s and dt must be positive");
    const std::size_t n = series.samples.size();
    const std::size_t tail = p.M * p.s;
    if (n < tail + 1) throw std::invalid_argument("series too short for embedding window");

    const std::size_t count = (n - tail - 1) / p.dt + 1;
    PointCloud cloud;
    cloud.embed_tail = tail;
    cloud.points.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(p.M + 1));
    cloud.source_index.resize(count);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t t = k * p.dt;
        cloud.source_index[k] = t;
        for (std::size_t j = 0; j <= p.M; ++j)
            cloud.points(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
                series.samples[t + j * p.s];
    }
    return cloud;
}

PcaModel pca_fit(const PointCloud& cloud, Eigen::Index d) {
    const Eigen::Index n = cloud.points.rows();
    const Eigen::Index dim = cloud.points.cols();
    if (n < 2) throw std::invalid_argument("pca_fit needs at least 2 points");
    if (d < 1 || d > dim) throw std::invalid_argument("pca dimension out of range");

    PcaModel model;
    model.mean = cloud.points.colwise().mean();
    Eigen::MatrixXd centered = cloud.points.rowwise() - model.mean.transpose();
    Eigen::MatrixXd cov =
        centered.transpose() * centered / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

    // Eigen returns ascending eigenvalues; take the top d in descending order.
    model.components.resize(dim, d);
    model.explained_variance.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        const Eigen::Index src = dim - 1 - k;
        double lambda = solver.eigenvalues()(src);
        model.explained_variance(k) = lambda > 0.0 ? lambda : 0.0;
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        // sign convention: first coordinate of non-negligible magnitude positive
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (std::abs(v(i)) > 1e-12) {
                if (v(i) < 0.0) v = -v;
                break;
            }
        }
        model.components.col(k) = v;
    }
    return model;
}

PointCloud pca_project(const PcaModel& model, const PointCloud& cloud) {
    if (cloud.points.cols() != model.mean.size())
        throw std::invalid_argument("cloud dimension does not match PCA model");
    PointCloud out;
    out.source_index = cloud.source_index;
    out.embed_tail = cloud.embed_tail;
    out.points = (cloud.points.rowwise() - model.mean.transpose()) * model.components;
    return out;
}

void save_cloud_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw std::runtime_error("cannot write file: " + path);
    outf << "source_index";
    for (Eigen::Index j = 0; j < cloud.dim(); ++j) outf << ",c" << (j + 1);
    outf << '\n';
    char buf[64];
    for (std::size_t k = 0; k < cloud.size(); ++k) {
        outf << cloud.source_index[k];
        for (Eigen::Index j = 0; j < cloud.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", cloud.points(static_cast<Eigen::Index>(k), j));
            outf << ',' << buf;
        }
        outf << '\n';
    }
}

}  // namespace qpcd
