#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qpcd/embedding.hpp"
#include "qpcd/transport.hpp"

namespace qpcd {

struct DetectorConfig {
    std::size_t h = 0;       // half-window, in cloud points
    std::size_t stride = 1;  // tau step, in cloud points
    OtConfig ot;
    std::optional<bool> use_exact;  // unset: exact iff h <= 32

    bool exact_solver() const { return use_exact.value_or(h <= 32); }
};

// W_p^p between the two halves of the sliding window, per window center tau.
struct WassersteinSeries {
    std::vector<std::size_t> taus;
    std::vector<double> values;
    // (source_index[tau-h], source_index[tau+h-1]) per tau
    std::vector<std::pair<std::size_t, std::size_t>> source_spans;
    std::size_t embed_tail = 0;   // extra raw samples covered past a source index
    std::size_t unconverged = 0;  // Sinkhorn windows that hit max_iter
};

struct ChangeStatistic {
    double value = 0.0;
    std::size_t argmax_tau = 0;  // smallest tau attaining the max
};

std::pair<EmpiricalMeasure, EmpiricalMeasure> split_window(const PointCloud& cloud,
                                                           std::size_t tau, std::size_t h);

WassersteinSeries wasserstein_series(const PointCloud& cloud, const DetectorConfig& cfg);

ChangeStatistic change_statistic(const WassersteinSeries& series);

void save_series_csv(const WassersteinSeries& series, const std::string& path);

// Evaluates window distances over the tau grid, optionally with per-cloud-point
// weights (each half-window renormalized to unit mass). Cost matrices are
// cached per tau up to a memory budget so bootstrap replicates can share them.
class WindowDistanceEngine {
public:
    WindowDistanceEngine(const PointCloud& cloud, const DetectorConfig& cfg,
                         std::size_t cache_budget_bytes = std::size_t(1) << 29);

    const std::vector<std::size_t>& taus() const { return taus_; }

    struct Eval {
        double value = 0.0;
        bool converged = true;
    };

    Eval distance(std::size_t k) const;  // uniform halves
    Eval distance(std::size_t k, const Eigen::VectorXd& point_weights) const;
    // Window measures drawn from a resampled pseudo-series: position t uses
    // cloud point mapping[t] with weight point_weights[t].
    Eval distance_mapped(std::size_t k, const std::vector<std::size_t>& mapping,
                         const Eigen::VectorXd& point_weights) const;
    // Measures over explicit cloud indices; weights renormalized per side.
    Eval distance_between(const std::vector<std::size_t>& left,
                          const std::vector<std::size_t>& right, Eigen::VectorXd wl,
                          Eigen::VectorXd wr) const;

    WassersteinSeries series(const PointCloud& cloud) const;

private:
    const PointCloud& cloud_;
    DetectorConfig cfg_;
    std::vector<std::size_t> taus_;
    std::vector<Eigen::MatrixXd> cost_cache_;  // empty when over budget
    bool cached_ = false;

    const Eigen::MatrixXd& cost_for(std::size_t k, Eigen::MatrixXd& scratch) const;
    Eval solve(const Eigen::MatrixXd& cost, const Eigen::VectorXd& wl,
               const Eigen::VectorXd& wr) const;
};

}  // namespace qpcd
