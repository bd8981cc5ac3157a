#include "qpcd/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace qpcd {

using nlohmann::json;

std::size_t PipelineConfig::points_per_loop() const {
    if (period_samples == 0) return 0;
    const auto ppl = static_cast<std::size_t>(
        std::llround(static_cast<double>(period_samples) / static_cast<double>(embed.dt)));
    return ppl > 0 ? ppl : 1;
}

DetectorConfig PipelineConfig::resolved_detector() const {
    DetectorConfig d = detector;
    if (d.h == 0) {
        if (period_samples == 0)
            throw std::invalid_argument(
                "detector.h not set and period_samples unknown; supply one of them");
        d.h = loops_per_half * points_per_loop();
    }
    if (d.stride == 0) {
        const std::size_t ppl = points_per_loop();
        d.stride = ppl > 0 ? ppl : 1;
    }
    return d;
}

BootstrapConfig PipelineConfig::resolved_bootstrap() const {
    BootstrapConfig b = bootstrap;
    if (b.block_len == 0) {
        const std::size_t ppl = points_per_loop();
        b.block_len = ppl > 0 ? ppl : 1;
    }
    if (b.seed == 0) b.seed = seed;
    return b;
}

namespace {

const char* scheme_name(WeightScheme s) {
    return s == WeightScheme::Multinomial ? "multinomial" : "exponential";
}

WeightScheme scheme_from(const std::string& name) {
    if (name == "multinomial") return WeightScheme::Multinomial;
    if (name == "exponential") return WeightScheme::ExponentialUnitMean;
    throw std::invalid_argument("unknown weight_scheme: " + name);
}

const char* resample_name(BlockResample r) {
    switch (r) {
        case BlockResample::Fixed: return "fixed";
        case BlockResample::Global: return "global";
        default: return "local";
    }
}

BlockResample resample_from(const std::string& name) {
    if (name == "fixed") return BlockResample::Fixed;
    if (name == "global") return BlockResample::Global;
    if (name == "local") return BlockResample::Local;
    throw std::invalid_argument("unknown resample mode: " + name);
}

}  // namespace

void to_json(json& j, const PipelineConfig& cfg) {
    j = json{
        {"embed", {{"M", cfg.embed.M}, {"s", cfg.embed.s}, {"dt", cfg.embed.dt}}},
        {"pca_dim", cfg.pca_dim},
        {"loops_per_half", cfg.loops_per_half},
        {"period_samples", cfg.period_samples},
        {"detector",
         {{"h", cfg.detector.h},
          {"stride", cfg.detector.stride},
          {"use_exact",
           cfg.detector.use_exact ? json(*cfg.detector.use_exact) : json(nullptr)},
          {"ot",
           {{"p", cfg.detector.ot.p},
            {"epsilon", cfg.detector.ot.epsilon},
            {"max_iter", cfg.detector.ot.max_iter},
            {"tol", cfg.detector.ot.tol}}}}},
        {"bootstrap",
         {{"replications", cfg.bootstrap.replications},
          {"block_len", cfg.bootstrap.block_len},
          {"alpha", cfg.bootstrap.alpha},
          {"seed", cfg.bootstrap.seed},
          {"weight_scheme", scheme_name(cfg.bootstrap.weight_scheme)},
          {"resample", resample_name(cfg.bootstrap.resample)},
          {"trim_mult", cfg.bootstrap.trim_mult}}},
        {"seed", cfg.seed},
    };
}

void from_json(const json& j, PipelineConfig& cfg) {
    if (j.contains("embed")) {
        const json& e = j.at("embed");
        if (e.contains("M")) e.at("M").get_to(cfg.embed.M);
        if (e.contains("s")) e.at("s").get_to(cfg.embed.s);
        if (e.contains("dt")) e.at("dt").get_to(cfg.embed.dt);
    }
    if (j.contains("pca_dim")) cfg.pca_dim = j.at("pca_dim").get<Eigen::Index>();
    if (j.contains("loops_per_half")) j.at("loops_per_half").get_to(cfg.loops_per_half);
    if (j.contains("period_samples")) j.at("period_samples").get_to(cfg.period_samples);
    if (j.contains("detector")) {
        const json& d = j.at("detector");
        if (d.contains("h")) d.at("h").get_to(cfg.detector.h);
        if (d.contains("stride")) d.at("stride").get_to(cfg.detector.stride);
        if (d.contains("use_exact")) {
            if (d.at("use_exact").is_null())
                cfg.detector.use_exact.reset();
            else
                cfg.detector.use_exact = d.at("use_exact").get<bool>();
        }
        if (d.contains("ot")) {
            const json& o = d.at("ot");
            if (o.contains("p")) o.at("p").get_to(cfg.detector.ot.p);
            if (o.contains("epsilon")) o.at("epsilon").get_to(cfg.detector.ot.epsilon);
            if (o.contains("max_iter")) o.at("max_iter").get_to(cfg.detector.ot.max_iter);
            if (o.contains("tol")) o.at("tol").get_to(cfg.detector.ot.tol);
        }
    }
    if (j.contains("bootstrap")) {
        const json& b = j.at("bootstrap");
        if (b.contains("replications")) b.at("replications").get_to(cfg.bootstrap.replications);
        if (b.contains("block_len")) b.at("block_len").get_to(cfg.bootstrap.block_len);
        if (b.contains("alpha")) b.at("alpha").get_to(cfg.bootstrap.alpha);
        if (b.contains("seed")) b.at("seed").get_to(cfg.bootstrap.seed);
        if (b.contains("weight_scheme"))
            cfg.bootstrap.weight_scheme = scheme_from(b.at("weight_scheme").get<std::string>());
        if (b.contains("resample"))
            cfg.bootstrap.resample = resample_from(b.at("resample").get<std::string>());
        if (b.contains("trim_mult")) b.at("trim_mult").get_to(cfg.bootstrap.trim_mult);
    }
    if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;
    return j.get<PipelineConfig>();
}

void set_config_key(json& j, const std::string& key, const std::string& value) {
    std::string pointer = "/";
    for (char c : key) pointer.push_back(c == '.' ? '/' : c);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;  // bare strings
    }
    j[json::json_pointer(pointer)] = parsed;
}

PipelineOutput run_detection(const AnnotatedSeries& series, const PipelineConfig& cfg) {
    using clock = std::chrono::steady_clock;
    auto ms_since = [](clock::time_point t0) {
        return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    };

    PipelineOutput out;
    auto t0 = clock::now();
    PointCloud raw = sliding_window_embed(series, cfg.embed);
    out.timings.embed_ms = ms_since(t0);

    t0 = clock::now();
    PcaModel model = pca_fit(raw, std::min<Eigen::Index>(cfg.pca_dim, raw.dim()));
    out.projected = pca_project(model, raw);
    out.timings.pca_ms = ms_since(t0);

    const DetectorConfig dcfg = cfg.resolved_detector();
    WindowDistanceEngine engine(out.projected, dcfg);

    t0 = clock::now();
    WassersteinSeries wseries = engine.series(out.projected);
    out.timings.series_ms = ms_since(t0);

    t0 = clock::now();
    out.sample = bootstrap_statistic(out.projected, engine, dcfg, cfg.resolved_bootstrap());
    out.timings.bootstrap_ms = ms_since(t0);

    out.result = label_intervals(wseries, out.sample.threshold);
    return out;
}

json detection_report(const PipelineOutput& out, const PipelineConfig& cfg) {
    json flagged = json::array();
    for (const auto& [s, e] : out.result.flagged) flagged.push_back({s, e});
    json spans = json::array();
    for (const auto& [s, e] : out.result.series.source_spans) spans.push_back({s, e});
    json series = {
        {"taus", out.result.series.taus},
        {"values", out.result.series.values},
        {"source_spans", spans},
        {"embed_tail", out.result.series.embed_tail},
        {"unconverged", out.result.series.unconverged},
    };
    json cfg_echo;
    to_json(cfg_echo, cfg);
    return json{
        {"threshold", out.result.threshold},
        {"statistic", {{"value", out.result.statistic.value},
                       {"argmax_tau", out.result.statistic.argmax_tau}}},
        {"change_detected", out.result.change_detected},
        {"flagged", flagged},
        {"bootstrap", {{"redraws", out.sample.redraws},
                       {"unconverged", out.sample.unconverged}}},
        {"config", cfg_echo},
        {"series", series},
        {"timings", {{"embed_ms", out.timings.embed_ms},
                     {"pca_ms", out.timings.pca_ms},
                     {"series_ms", out.timings.series_ms},
                     {"bootstrap_ms", out.timings.bootstrap_ms}}},
    };
}

DetectionResult detection_from_report(const json& report) {
    DetectionResult result;
    result.threshold = report.at("threshold").get<double>();
    result.change_detected = report.at("change_detected").get<bool>();
    result.statistic.value = report.at("statistic").at("value").get<double>();
    result.statistic.argmax_tau = report.at("statistic").at("argmax_tau").get<std::size_t>();
    for (const auto& pair : report.at("flagged"))
        result.flagged.emplace_back(pair.at(0).get<std::size_t>(), pair.at(1).get<std::size_t>());
    if (report.contains("series")) {
        const json& s = report.at("series");
        s.at("taus").get_to(result.series.taus);
        s.at("values").get_to(result.series.values);
        s.at("embed_tail").get_to(result.series.embed_tail);
        for (const auto& pair : s.at("source_spans"))
            result.series.source_spans.emplace_back(pair.at(0).get<std::size_t>(),
                                                    pair.at(1).get<std::size_t>());
    }
    return result;
}

void save_plot_svg(const WassersteinSeries& series, double threshold,
                   const std::vector<std::pair<std::size_t, std::size_t>>& flagged,
                   const std::string& path) {
    if (series.values.empty()) throw std::invalid_argument("empty series");
    const double width = 960.0, height = 360.0, margin = 40.0;
    double vmax = threshold;
    for (double v : series.values) vmax = std::max(vmax, v);
    if (vmax <= 0.0) vmax = 1.0;
    const double tau_min = static_cast<double>(series.taus.front());
    const double tau_max = static_cast<double>(series.taus.back());
    const double span = std::max(1.0, tau_max - tau_min);
    auto xpos = [&](double tau) { return margin + (tau - tau_min) / span * (width - 2 * margin); };
    auto ypos = [&](double v) { return height - margin - v / vmax * (height - 2 * margin); };

    std::ofstream svg(path);
    if (!svg) throw std::runtime_error("cannot write file: " + path);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";

    // flagged spans, mapped back to tau positions via source spans
    for (std::size_t k = 0; k < series.taus.size(); ++k) {
        const auto& [lo, hi] = series.source_spans[k];
        for (const auto& [fs, fe] : flagged) {
            if (lo < fe && fs < hi + series.embed_tail + 1) {
                const double x = xpos(static_cast<double>(series.taus[k]));
                svg << "  <rect x=\"" << x - 1.5 << "\" y=\"" << margin << "\" width=\"3\" height=\""
                    << height - 2 * margin << "\" fill=\"#f6c6c6\"/>\n";
                break;
            }
        }
    }

    svg << "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series.taus.size(); ++k) {
        svg << xpos(static_cast<double>(series.taus[k])) << ',' << ypos(series.values[k]);
        if (k + 1 < series.taus.size()) svg << ' ';
    }
    svg << "\"/>\n";
    svg << "  <line x1=\"" << margin << "\" y1=\"" << ypos(threshold) << "\" x2=\""
        << width - margin << "\" y2=\"" << ypos(threshold)
        << "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
    svg << "  <line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\""
        << width - margin << "\" y2=\"" << height - margin << "\" stroke=\"#333\"/>\n";
    svg << "  <line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin
        << "\" y2=\"" << height - margin << "\" stroke=\"#333\"/>\n";
    svg << "</svg>\n";
}

}  // namespace qpcd
