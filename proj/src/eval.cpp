#include "qpcd/eval.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qpcd {

SeriesScore score_series(const DetectionResult& result, const AnnotatedSeries& truth) {
    SeriesScore score;
    score.name = truth.name;
    score.truth_positive = !truth.annotations.empty();
    if (!score.truth_positive) {
        score.detected = result.change_detected;
        return score;
    }
    // on a positive series the detection must overlap some annotation
    bool overlap = false;
    for (const auto& [fs, fe] : result.flagged) {
        for (const Annotation& ann : truth.annotations) {
            if (fs < ann.end && ann.start < fe) {
                overlap = true;
                break;
            }
        }
        if (overlap) break;
    }
    score.detected = result.change_detected && overlap;
    return score;
}

EvalReport aggregate(const std::vector<SeriesScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("no scores to aggregate");
    EvalReport report;
    report.per_series = scores;
    for (const SeriesScore& s : scores) {
        if (s.truth_positive)
            (s.detected ? report.counts.tp : report.counts.fn)++;
        else
            (s.detected ? report.counts.fp : report.counts.tn)++;
    }
    const auto& c = report.counts;
    if (c.tp + c.fn > 0)
        report.sensitivity = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tn + c.fp > 0)
        report.specificity = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    return report;
}

EvalReport aggregate_repetitions(const std::vector<std::vector<SeriesScore>>& runs) {
    if (runs.empty()) throw std::invalid_argument("no runs to aggregate");
    std::vector<SeriesScore> all;
    std::vector<double> sens, spec;
    for (const auto& run : runs) {
        EvalReport r = aggregate(run);
        sens.push_back(r.sensitivity);
        spec.push_back(r.specificity);
        all.insert(all.end(), run.begin(), run.end());
    }
    EvalReport report = aggregate(all);
    report.repetitions = runs.size();
    if (runs.size() > 1) {
        auto sd = [](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double acc = 0.0;
            for (double x : xs) acc += (x - mean) * (x - mean);
            return std::sqrt(acc / static_cast<double>(xs.size() - 1));
        };
        report.sensitivity_sd = sd(sens);
        report.specificity_sd = sd(spec);
    }
    return report;
}

std::string format_report_table(const EvalReport& report) {
    std::ostringstream os;
    os << "scoring unit: series part (binary detection per part)\n";
    char line[128];
    std::snprintf(line, sizeof(line), "%-14s %8s\n", "metric", "value");
    os << line;
    std::snprintf(line, sizeof(line), "%-14s %8.4f", "sensitivity", report.sensitivity);
    os << line;
    if (report.repetitions > 1) {
        std::snprintf(line, sizeof(line), " +/- %.4f", report.sensitivity_sd);
        os << line;
    }
    os << '\n';
    std::snprintf(line, sizeof(line), "%-14s %8.4f", "specificity", report.specificity);
    os << line;
    if (report.repetitions > 1) {
        std::snprintf(line, sizeof(line), " +/- %.4f", report.specificity_sd);
        os << line;
    }
    os << '\n';
    std::snprintf(line, sizeof(line), "%-14s %8zu\n", "tp", report.counts.tp);
    os << line;
    std::snprintf(line, sizeof(line), "%-14s %8zu\n", "fp", report.counts.fp);
    os << line;
    std::snprintf(line, sizeof(line), "%-14s %8zu\n", "tn", report.counts.tn);
    os << line;
    std::snprintf(line, sizeof(line), "%-14s %8zu\n", "fn", report.counts.fn);
    os << line;
    return os.str();
}

}  // namespace qpcd
