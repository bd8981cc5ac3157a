#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

#include "qpcd/signal.hpp"

namespace qpcd {

struct EmbedParams {
    std::size_t M = 450;  // window element count minus one
    std::size_t s = 1;    // intra-window stride, samples
    std::size_t dt = 2;   // step between consecutive embedding points, samples
};

// Ordered delay-embedding vectors; row k of `points` is the embedding of the
// signal at source_index[k]. embed_tail = M*s is the extra span of raw
// samples each point depends on past its source index.
struct PointCloud {
    Eigen::MatrixXd points;  // one point per row
    std::vector<std::size_t> source_index;
    std::size_t embed_tail = 0;

    std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
    Eigen::Index dim() const { return points.cols(); }
};

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // one orthonormal component per column
    Eigen::VectorXd explained_variance;  // non-increasing
};

PointCloud sliding_window_embed(const AnnotatedSeries& series, const EmbedParams& p);

PcaModel pca_fit(const PointCloud& cloud, Eigen::Index d);

PointCloud pca_project(const PcaModel& model, const PointCloud& cloud);

// Dump `source_index,c1,...,cd` rows for plotting.
void save_cloud_csv(const PointCloud& cloud, const std::string& path);

}  // namespace qpcd
