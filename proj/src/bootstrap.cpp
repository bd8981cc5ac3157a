#include "qpcd/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qpcd/parallel.hpp"
#include "qpcd/rng.hpp"

namespace qpcd {

std::vector<std::pair<std::size_t, std::size_t>> mbb_blocks(std::size_t n_points,
                                                            std::size_t block_len) {
    if (block_len < 1) throw std::invalid_argument("block_len must be >= 1");
    std::vector<std::pair<std::size_t, std::size_t>> blocks;
    for (std::size_t start = 0; start < n_points; start += block_len)
        blocks.emplace_back(start, std::min(start + block_len, n_points));
    return blocks;
}

std::vector<double> mbb_weights(std::size_t n_blocks, WeightScheme scheme,
                                std::mt19937_64& rng) {
    if (n_blocks < 1) throw std::invalid_argument("n_blocks must be >= 1");
    std::vector<double> weights(n_blocks, 0.0);
    if (scheme == WeightScheme::Multinomial) {
        std::uniform_int_distribution<std::size_t> pick(0, n_blocks - 1);
        for (std::size_t i = 0; i < n_blocks; ++i) weights[pick(rng)] += 1.0;
    } else {
        std::exponential_distribution<double> exp1(1.0);
        for (double& w : weights) w = exp1(rng);
    }
    return weights;
}

double bootstrap_threshold(std::vector<double> statistics, double alpha) {
    if (statistics.empty()) throw std::invalid_argument("empty statistics sample");
    if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("alpha must be in (0,1)");
    std::sort(statistics.begin(), statistics.end());
    const double b = static_cast<double>(statistics.size());
    std::size_t idx = static_cast<std::size_t>(std::ceil((1.0 - alpha) * b));
    if (idx > 0) --idx;
    if (idx >= statistics.size()) idx = statistics.size() - 1;
    return statistics[idx];
}

double bootstrap_replicate_statistic(const WindowDistanceEngine& engine,
                                     const Eigen::VectorXd& point_weights,
                                     std::size_t* unconverged,
                                     const std::vector<std::size_t>* windows) {
    double best = 0.0;
    bool first = true;
    const std::size_t count = windows ? windows->size() : engine.taus().size();
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t k = windows ? (*windows)[i] : i;
        const WindowDistanceEngine::Eval e = engine.distance(k, point_weights);
        if (!e.converged && unconverged) ++*unconverged;
        if (first || e.value > best) best = e.value;
        first = false;
    }
    return best;
}

namespace {

// Per-point weights from per-block weights, fixed consecutive blocks.
Eigen::VectorXd expand_weights(const std::vector<std::pair<std::size_t, std::size_t>>& blocks,
                               const std::vector<double>& block_weights, std::size_t n_points) {
    Eigen::VectorXd w(static_cast<Eigen::Index>(n_points));
    for (std::size_t b = 0; b < blocks.size(); ++b)
        for (std::size_t i = blocks[b].first; i < blocks[b].second; ++i)
            w(static_cast<Eigen::Index>(i)) = block_weights[b];
    return w;
}

// Pseudo-series of cloud indices: n_blocks moving blocks drawn with
// replacement, concatenated. Destroys the change point's tau-locality while
// keeping short-range dependence inside each block.
std::vector<std::size_t> resample_mapping(std::size_t n_points, std::size_t block_len,
                                          std::size_t n_blocks, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, n_points - block_len);
    std::vector<std::size_t> mapping(n_points);
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t start = pick(rng);
        for (std::size_t off = 0; off < block_len; ++off) {
            const std::size_t t = b * block_len + off;
            if (t >= n_points) return mapping;
            mapping[t] = start + off;
        }
    }
    return mapping;
}

// One pseudo-window per real window: a window block lifted from a random grid
// position and re-split circularly at a random cut. Under H0 every position
// and cut pair yields halves with the law of the real split (stationarity),
// while a change point sitting at some window's center is never reproduced:
// cuts stay at least h/3 away from the real one, so at most a third of the
// contrasting mass ends up unbalanced.
double local_replicate(const WindowDistanceEngine& engine, const DetectorConfig& dcfg,
                       const BootstrapConfig& bcfg, std::mt19937_64& rng,
                       std::size_t* bad, double* window_values) {
    const std::size_t h = dcfg.h;
    const std::size_t L = std::min(bcfg.block_len, h);
    std::uniform_int_distribution<std::size_t> cut(h / 3, h - h / 3);
    std::uniform_int_distribution<std::size_t> place(0, engine.taus().size() - 1);
    std::exponential_distribution<double> exp1(1.0);

    std::vector<std::size_t> half[2];
    Eigen::VectorXd hw[2];
    for (int side = 0; side < 2; ++side) {
        half[side].resize(h);
        hw[side].resize(static_cast<Eigen::Index>(h));
    }

    double best = 0.0;
    bool first = true;
    for (std::size_t k = 0; k < engine.taus().size(); ++k) {
        const std::size_t base = engine.taus()[place(rng)] - h;
        const std::size_t a = cut(rng);
        for (int side = 0; side < 2; ++side) {
            const std::size_t off0 = a + static_cast<std::size_t>(side) * h;
            double w = 1.0;
            for (std::size_t i = 0; i < h; ++i) {
                if (i % L == 0 && bcfg.weight_scheme == WeightScheme::ExponentialUnitMean)
                    w = exp1(rng);
                half[side][i] = base + (off0 + i) % (2 * h);
                hw[side](static_cast<Eigen::Index>(i)) = w;
            }
        }
        const auto e = engine.distance_between(half[0], half[1], hw[0], hw[1]);
        if (!e.converged) ++*bad;
        window_values[k] = e.value;
        if (first || e.value > best) best = e.value;
        first = false;
    }
    return best;
}

double quantile_of(std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    auto idx = static_cast<std::size_t>(q * static_cast<double>(v.size() - 1));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
    return v[idx];
}

// Every half-window on the tau grid must carry positive mass.
bool halves_have_mass(const Eigen::VectorXd& w, const std::vector<std::size_t>& taus,
                      std::size_t h) {
    const Eigen::Index hi = static_cast<Eigen::Index>(h);
    for (std::size_t tau : taus) {
        const Eigen::Index t = static_cast<Eigen::Index>(tau);
        if (w.segment(t - hi, hi).sum() <= 0.0) return false;
        if (w.segment(t, hi).sum() <= 0.0) return false;
    }
    return true;
}

}  // namespace

BootstrapSample bootstrap_statistic(const PointCloud& cloud, const WindowDistanceEngine& engine,
                                    const DetectorConfig& dcfg, const BootstrapConfig& bcfg) {
    if (bcfg.replications < 100) throw std::invalid_argument("replications must be >= 100");
    if (bcfg.block_len > cloud.size())
        throw std::invalid_argument("block_len exceeds cloud size");
    const auto blocks = mbb_blocks(cloud.size(), bcfg.block_len);

    BootstrapSample sample;
    sample.statistics.resize(bcfg.replications);
    const std::size_t n_windows = engine.taus().size();
    std::vector<double> window_values;
    if (bcfg.resample == BlockResample::Local)
        window_values.resize(bcfg.replications * n_windows);

    std::vector<std::size_t> kept;
    const std::vector<std::size_t>* kept_ptr = nullptr;
    if (bcfg.resample == BlockResample::Fixed && bcfg.trim_mult > 0.0) {
        std::vector<double> plug(n_windows);
        for (std::size_t k = 0; k < n_windows; ++k) plug[k] = engine.distance(k).value;
        std::vector<double> scratch = plug;
        const double med = quantile_of(scratch, 0.5);
        const double seed_fence = bcfg.trim_mult * med;
        const double run_fence = 0.5 * bcfg.trim_mult * med;
        // Exclude the whole contiguous elevated run around each seed so the
        // transition shoulders of a change do not inflate the threshold.
        std::vector<char> drop(n_windows, 0);
        for (std::size_t k = 0; k < n_windows; ++k) {
            if (plug[k] <= seed_fence) continue;
            drop[k] = 1;
            for (std::size_t j = k; j > 0 && plug[j - 1] > run_fence; --j) drop[j - 1] = 1;
            for (std::size_t j = k + 1; j < n_windows && plug[j] > run_fence; ++j) drop[j] = 1;
        }
        for (std::size_t k = 0; k < n_windows; ++k)
            if (!drop[k]) kept.push_back(k);
        if (!kept.empty() && kept.size() < n_windows) kept_ptr = &kept;
    }
    std::atomic<std::size_t> redraws{0};
    std::atomic<std::size_t> unconverged{0};
    std::atomic<bool> exhausted{false};

    parallel_for(bcfg.replications, [&](std::size_t b) {
        for (std::size_t attempt = 0; attempt < 100; ++attempt) {
            auto rng = make_engine(bcfg.seed, mix64(b, attempt));
            std::size_t bad = 0;
            if (bcfg.resample == BlockResample::Local) {
                sample.statistics[b] = local_replicate(engine, dcfg, bcfg, rng, &bad,
                                                       window_values.data() + b * n_windows);
            } else {
                std::vector<std::size_t> mapping;
                if (bcfg.resample == BlockResample::Global)
                    mapping = resample_mapping(cloud.size(), bcfg.block_len, blocks.size(), rng);
                std::vector<double> block_w =
                    mbb_weights(blocks.size(), bcfg.weight_scheme, rng);
                Eigen::VectorXd w = expand_weights(blocks, block_w, cloud.size());
                if (!halves_have_mass(w, engine.taus(), dcfg.h)) {
                    redraws.fetch_add(1);
                    continue;
                }
                if (bcfg.resample == BlockResample::Global) {
                    double best = 0.0;
                    bool first = true;
                    for (std::size_t k = 0; k < engine.taus().size(); ++k) {
                        const auto e = engine.distance_mapped(k, mapping, w);
                        if (!e.converged) ++bad;
                        if (first || e.value > best) best = e.value;
                        first = false;
                    }
                    sample.statistics[b] = best;
                } else {
                    sample.statistics[b] =
                        bootstrap_replicate_statistic(engine, w, &bad, kept_ptr);
                }
            }
            if (bad) unconverged.fetch_add(bad);
            return;
        }
        exhausted.store(true);
    });
    if (exhausted.load())
        throw std::runtime_error("bootstrap replicate exceeded 100 redraw attempts");

    if (bcfg.resample == BlockResample::Local) {
        // Overlapping embeddings correlate neighboring cloud points, and a
        // rotated split has two short-lag contact zones where the real split
        // has one, deflating and compressing the resampled distances. Map the
        // resampled window-value law onto the plug-in one by matching median
        // and inner-quantile spread; both are estimated from quantiles at or
        // below q70, which windows straddling a change cannot reach. Plug-in
        // quantiles come from a 4x finer tau grid to tame estimation noise.
        DetectorConfig fine = dcfg;
        fine.stride = std::max<std::size_t>(1, dcfg.stride / 4);
        WindowDistanceEngine est(cloud, fine);
        std::vector<double> plug(est.taus().size());
        for (std::size_t k = 0; k < plug.size(); ++k) plug[k] = est.distance(k).value;

        const double med_p = quantile_of(plug, 0.5);
        const double lo_p = quantile_of(plug, 0.3);
        const double hi_p = quantile_of(plug, 0.7);
        const double med_b = quantile_of(window_values, 0.5);
        const double lo_b = quantile_of(window_values, 0.3);
        const double hi_b = quantile_of(window_values, 0.7);
        if (hi_b > lo_b && hi_p > lo_p) {
            const double spread = (hi_p - lo_p) / (hi_b - lo_b);
            for (double& s : sample.statistics)
                s = std::max(0.0, med_p + (s - med_b) * spread);
        }
    }

    sample.redraws = redraws.load();
    sample.unconverged = unconverged.load();
    sample.threshold = bootstrap_threshold(sample.statistics, bcfg.alpha);
    return sample;
}

BootstrapSample bootstrap_statistic(const PointCloud& cloud, const DetectorConfig& dcfg,
                                    const BootstrapConfig& bcfg) {
    WindowDistanceEngine engine(cloud, dcfg);
    return bootstrap_statistic(cloud, engine, dcfg, bcfg);
}

DetectionResult label_intervals(const WassersteinSeries& series, double threshold) {
    if (threshold < 0.0) throw std::invalid_argument("threshold must be non-negative");
    DetectionResult result;
    result.threshold = threshold;
    result.series = series;
    result.statistic = change_statistic(series);
    result.change_detected = result.statistic.value > threshold;

    for (std::size_t k = 0; k < series.values.size(); ++k) {
        if (series.values[k] <= threshold) continue;
        // flag every raw sample that influenced any point of the window
        const std::size_t lo = series.source_spans[k].first;
        const std::size_t hi = series.source_spans[k].second + series.embed_tail + 1;
        if (!result.flagged.empty() && lo <= result.flagged.back().second)
            result.flagged.back().second = std::max(result.flagged.back().second, hi);
        else
            result.flagged.emplace_back(lo, hi);
    }
    return result;
}

}  // namespace qpcd
