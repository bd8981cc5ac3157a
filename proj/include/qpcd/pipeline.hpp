#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "qpcd/bootstrap.hpp"
#include "qpcd/embedding.hpp"
#include "qpcd/eval.hpp"

namespace qpcd {

// Whole-pipeline configuration. Defaults reproduce the reference parameter
// set: M*s = 450, s = 1, dt = 2, two curve loops per half-window, alpha = 5%.
struct PipelineConfig {
    EmbedParams embed;
    Eigen::Index pca_dim = 3;
    std::size_t loops_per_half = 2;
    // Signal period in samples; used to derive h (= loops_per_half * points
    // per loop) and the bootstrap block length when those are left at 0.
    std::size_t period_samples = 0;
    // Window stride 0 is resolved to one loop per step, matching the block
    // grid of the bootstrap.
    DetectorConfig detector{.stride = 0};
    BootstrapConfig bootstrap;
    std::uint64_t seed = 0;

    std::size_t points_per_loop() const;
    // Concrete detector/bootstrap settings with derived fields filled in.
    DetectorConfig resolved_detector() const;
    BootstrapConfig resolved_bootstrap() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& cfg);
void from_json(const nlohmann::json& j, PipelineConfig& cfg);

PipelineConfig load_config(const std::string& path);
// Dotted-key override, e.g. set_config_key(j, "detector.h", "64").
void set_config_key(nlohmann::json& j, const std::string& key, const std::string& value);

struct StageTimings {
    double embed_ms = 0.0;
    double pca_ms = 0.0;
    double series_ms = 0.0;
    double bootstrap_ms = 0.0;
};

struct PipelineOutput {
    DetectionResult result;
    PointCloud projected;
    BootstrapSample sample;
    StageTimings timings;
};

PipelineOutput run_detection(const AnnotatedSeries& series, const PipelineConfig& cfg);

// Detection report: threshold, statistic, flags, config echo, series values.
// Timings live under a separate "timings" key so byte comparisons can drop it.
nlohmann::json detection_report(const PipelineOutput& out, const PipelineConfig& cfg);

// Flags/threshold parsed back from a detection report (for offline scoring).
DetectionResult detection_from_report(const nlohmann::json& report);

void save_plot_svg(const WassersteinSeries& series, double threshold,
                   const std::vector<std::pair<std::size_t, std::size_t>>& flagged,
                   const std::string& path);

}  // namespace qpcd
