#pragma once

#include <string>
#include <vector>

#include "qpcd/bootstrap.hpp"
#include "qpcd/signal.hpp"

namespace qpcd {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

struct SeriesScore {
    std::string name;
    bool detected = false;
    bool truth_positive = false;
};

struct EvalReport {
    double sensitivity = 0.0;
    double specificity = 0.0;
    ConfusionCounts counts;
    std::vector<SeriesScore> per_series;
    // Filled when scores from several seeded repetitions are aggregated.
    double sensitivity_sd = 0.0;
    double specificity_sd = 0.0;
    std::size_t repetitions = 1;
};

// Series-level scoring: a detection on an annotated series counts only if a
// flagged interval overlaps an annotation; otherwise it scores FN (no FP charged).
SeriesScore score_series(const DetectionResult& result, const AnnotatedSeries& truth);

EvalReport aggregate(const std::vector<SeriesScore>& scores);

// Mean +/- sd across repetitions (each inner vector is one seeded run).
EvalReport aggregate_repetitions(const std::vector<std::vector<SeriesScore>>& runs);

std::string format_report_table(const EvalReport& report);

}  // namespace qpcd
