#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "qpcd/detector.hpp"

namespace qpcd {

enum class WeightScheme {
    Multinomial,          // block multiplicities of a classic MBB resample
    ExponentialUnitMean,  // i.i.d. Exp(1) multipliers
};

enum class BlockResample {
    Fixed,   // weights on fixed consecutive blocks, no repositioning
    Global,  // pseudo-series of moving blocks drawn from the whole cloud
    Local,   // each half-window rebuilt from moving blocks of its own window
};

struct BootstrapConfig {
    std::size_t replications = 500;  // B
    std::size_t block_len = 0;       // cloud points per block; 0 = one loop per block
    double alpha = 0.05;
    std::uint64_t seed = 0;
    WeightScheme weight_scheme = WeightScheme::ExponentialUnitMean;
    BlockResample resample = BlockResample::Fixed;
    // With Fixed resampling the replicate max skips suspected change
    // windows: contiguous runs above trim_mult / 2 times the median window
    // value that contain a window above trim_mult times the median.
    // Reweighting a window that straddles a change point reproduces the
    // change in every replicate and the threshold would track the statistic
    // itself; windows at background level alone estimate the null. Set to 0
    // to disable trimming.
    double trim_mult = 4.0;
};

struct BootstrapSample {
    std::vector<double> statistics;  // T^b per replicate, replicate order
    double threshold = 0.0;          // empirical (1-alpha)-quantile
    std::size_t redraws = 0;         // replicates redrawn due to zero-mass halves
    std::size_t unconverged = 0;     // solver non-convergence events
};

struct DetectionResult {
    double threshold = 0.0;
    std::vector<std::pair<std::size_t, std::size_t>> flagged;  // half-open sample intervals
    WassersteinSeries series;
    ChangeStatistic statistic;
    bool change_detected = false;
};

// Consecutive non-overlapping blocks covering [0, n_points); last may be short.
std::vector<std::pair<std::size_t, std::size_t>> mbb_blocks(std::size_t n_points,
                                                            std::size_t block_len);

// One non-negative unit-mean weight per block.
std::vector<double> mbb_weights(std::size_t n_blocks, WeightScheme scheme,
                                std::mt19937_64& rng);

// (1-alpha) empirical quantile: order statistic ceil((1-alpha)*B)-1, 0-based.
double bootstrap_threshold(std::vector<double> statistics, double alpha);

BootstrapSample bootstrap_statistic(const PointCloud& cloud, const DetectorConfig& dcfg,
                                    const BootstrapConfig& bcfg);

// Variant sharing a prebuilt distance engine (cost-matrix cache reuse).
BootstrapSample bootstrap_statistic(const PointCloud& cloud, const WindowDistanceEngine& engine,
                                    const DetectorConfig& dcfg, const BootstrapConfig& bcfg);

// T^b for one explicit per-point weight vector; also a test hook. When
// windows is given the max runs over those window indices only.
double bootstrap_replicate_statistic(const WindowDistanceEngine& engine,
                                     const Eigen::VectorXd& point_weights,
                                     std::size_t* unconverged = nullptr,
                                     const std::vector<std::size_t>* windows = nullptr);

DetectionResult label_intervals(const WassersteinSeries& series, double threshold);

}  // namespace qpcd
