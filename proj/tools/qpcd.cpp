// qpcd: change point detection in quasi-periodic signals.
//
// Subcommands:
//   generate  write a deterministic synthetic corpus (CSV + manifest.json)
//   detect    run the full pipeline on one CSV, emit a JSON report
//   eval      score detection reports against a corpus manifest
//   plot      render a Wasserstein/threshold SVG from a detection report
//
// detect exit codes: 0 = no change detected, 2 = change detected, 1 = error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "qpcd/corpus.hpp"
#include "qpcd/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

qpcd::PipelineConfig make_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides,
                                 std::uint64_t seed, bool seed_given, bool exact_ot) {
    json j;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config: " + config_path);
        in >> j;
    } else {
        qpcd::to_json(j, qpcd::PipelineConfig{});
    }
    for (const std::string& kv : overrides) {
        const auto pos = kv.find('=');
        if (pos == std::string::npos)
            throw std::runtime_error("--set expects KEY=VALUE, got: " + kv);
        qpcd::set_config_key(j, kv.substr(0, pos), kv.substr(pos + 1));
    }
    qpcd::PipelineConfig cfg = j.get<qpcd::PipelineConfig>();
    if (seed_given) cfg.seed = seed;
    if (exact_ot) cfg.detector.use_exact = true;
    return cfg;
}

double resolve_sample_rate(const std::string& input, double rate_flag) {
    if (rate_flag > 0.0) return rate_flag;
    const fs::path sidecar = input + ".json";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        json j;
        in >> j;
        if (j.contains("sample_rate")) return j.at("sample_rate").get<double>();
    }
    return 0.0;
}

int cmd_generate(const std::string& out_dir, std::size_t count, double positive_fraction,
                 const std::string& mix_arg, qpcd::SynthesisParams synth,
                 std::size_t anomaly_samples, std::uint64_t seed) {
    qpcd::CorpusParams params;
    params.count = count;
    params.positive_fraction = positive_fraction;
    params.synth = synth;
    params.anomaly_samples = anomaly_samples;
    params.seed = seed;
    if (!mix_arg.empty()) {
        std::stringstream ss(mix_arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto kind = qpcd::arrhythmia_from_string(item);
            if (!kind) throw std::runtime_error("unknown arrhythmia kind in --mix: " + item);
            params.mix.push_back(*kind);
        }
    }
    auto corpus = qpcd::generate_corpus(params);
    qpcd::write_corpus(corpus, params, out_dir);
    std::cout << "wrote " << corpus.size() << " series + manifest.json to " << out_dir << "\n";
    return 0;
}

int cmd_detect(const std::string& input, const std::string& out_dir, double rate_flag,
               const qpcd::PipelineConfig& cfg, bool svg, bool cloud_csv, bool series_csv) {
    qpcd::CsvFormat format;
    format.sample_rate = resolve_sample_rate(input, rate_flag);
    qpcd::AnnotatedSeries series = qpcd::load_csv(input, format);

    qpcd::PipelineOutput out = qpcd::run_detection(series, cfg);
    json report = qpcd::detection_report(out, cfg);

    fs::create_directories(out_dir);
    const std::string stem = fs::path(input).stem().string();
    {
        std::ofstream rf(fs::path(out_dir) / (stem + ".json"));
        if (!rf) throw std::runtime_error("cannot write report for " + input);
        rf << report.dump(2) << '\n';
    }
    if (svg)
        qpcd::save_plot_svg(out.result.series, out.result.threshold, out.result.flagged,
                            (fs::path(out_dir) / (stem + ".svg")).string());
    if (cloud_csv)
        qpcd::save_cloud_csv(out.projected, (fs::path(out_dir) / (stem + ".cloud.csv")).string());
    if (series_csv)
        qpcd::save_series_csv(out.result.series,
                              (fs::path(out_dir) / (stem + ".series.csv")).string());

    std::cout << (out.result.change_detected ? "change detected" : "no change") << ", threshold "
              << out.result.threshold << ", statistic " << out.result.statistic.value << "\n";
    return out.result.change_detected ? 2 : 0;
}

int cmd_eval(const std::string& corpus_dir, const std::string& results_dir,
             const std::string& out_path) {
    std::ifstream mf(fs::path(corpus_dir) / "manifest.json");
    if (!mf) throw std::runtime_error("cannot open manifest.json in " + corpus_dir);
    json manifest;
    mf >> manifest;

    std::vector<qpcd::SeriesScore> scores;
    for (const json& entry : manifest.at("series")) {
        const std::string file = entry.at("file").get<std::string>();
        const std::string stem = fs::path(file).stem().string();
        const fs::path report_path = fs::path(results_dir) / (stem + ".json");
        std::ifstream rf(report_path);
        if (!rf) throw std::runtime_error("missing result for manifest entry: " + report_path.string());
        json report;
        rf >> report;
        qpcd::DetectionResult result = qpcd::detection_from_report(report);

        qpcd::AnnotatedSeries truth;
        truth.name = file;
        truth.samples.resize(1);  // scoring only touches annotations
        for (const json& ann : entry.at("annotations"))
            truth.annotations.push_back({ann.at(0).get<std::size_t>(),
                                         ann.at(1).get<std::size_t>(),
                                         ann.at(2).get<std::string>()});
        scores.push_back(qpcd::score_series(result, truth));
    }
    if (scores.empty()) throw std::runtime_error("manifest lists no series");

    qpcd::EvalReport report = qpcd::aggregate(scores);
    json jr = {{"sensitivity", report.sensitivity},
               {"specificity", report.specificity},
               {"counts", {{"tp", report.counts.tp}, {"fp", report.counts.fp},
                           {"tn", report.counts.tn}, {"fn", report.counts.fn}}}};
    json per = json::array();
    for (const auto& s : report.per_series)
        per.push_back({{"name", s.name}, {"detected", s.detected}, {"truth", s.truth_positive}});
    jr["per_series"] = per;
    if (!out_path.empty()) {
        std::ofstream of(out_path);
        if (!of) throw std::runtime_error("cannot write " + out_path);
        of << jr.dump(2) << '\n';
    }
    std::cout << qpcd::format_report_table(report);
    return 0;
}

int cmd_plot(const std::string& report_path, const std::string& out_path) {
    std::ifstream rf(report_path);
    if (!rf) throw std::runtime_error("cannot open report: " + report_path);
    json report;
    rf >> report;
    qpcd::DetectionResult result = qpcd::detection_from_report(report);
    if (result.series.values.empty())
        throw std::runtime_error("report carries no series values to plot");
    qpcd::save_plot_svg(result.series, result.threshold, result.flagged, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change point detection in quasi-periodic signals"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic corpus");
    std::string gen_out = "corpus";
    std::size_t gen_count = 84;
    double gen_pos_frac = 0.5;
    std::string gen_mix;
    std::uint64_t gen_seed = 0;
    qpcd::SynthesisParams synth{120.0, 4, 0.0, 0.03, 2560, 160.0, 0};
    std::size_t anomaly_samples = 480;
    gen->add_option("--out", gen_out, "Output directory");
    gen->add_option("--count", gen_count, "Number of series");
    gen->add_option("--positive-fraction", gen_pos_frac, "Fraction with an injected anomaly");
    gen->add_option("--mix", gen_mix, "Comma-separated arrhythmia kinds to cycle through");
    gen->add_option("--seed", gen_seed, "Corpus seed");
    gen->add_option("--sample-rate", synth.sample_rate, "Samples per second");
    gen->add_option("--heart-rate", synth.heart_rate_bpm, "Host heart rate, bpm");
    gen->add_option("--duration", synth.duration_samples, "Samples per series");
    gen->add_option("--noise-sigma", synth.noise_sigma, "Gaussian noise sigma");
    gen->add_option("--wavelet-order", synth.wavelet_order, "Daubechies order (2-10)");
    gen->add_option("--anomaly-samples", anomaly_samples, "Injected episode length");

    // detect
    auto* det = app.add_subcommand("detect", "Run detection on one CSV series");
    std::string det_input, det_config, det_out = ".";
    double det_rate = 0.0;
    std::uint64_t det_seed = 0;
    std::vector<std::string> det_sets;
    bool det_svg = false, det_cloud = false, det_series = false, det_exact = false;
    det->add_option("input", det_input, "Input CSV")->required();
    det->add_option("--config", det_config, "Pipeline config JSON");
    det->add_option("--out", det_out, "Output directory for the report");
    det->add_option("--rate", det_rate, "Sample rate (else sidecar <input>.json)");
    auto* det_seed_opt = det->add_option("--seed", det_seed, "Override config seed");
    det->add_option("--set", det_sets, "Config override KEY=VALUE (dotted keys)");
    det->add_flag("--svg", det_svg, "Emit Wasserstein/threshold SVG");
    det->add_flag("--cloud-csv", det_cloud, "Dump the PCA point cloud");
    det->add_flag("--series-csv", det_series, "Dump the Wasserstein series");
    det->add_flag("--exact-ot", det_exact, "Force the exact OT solver");

    // eval
    auto* ev = app.add_subcommand("eval", "Score results against a corpus manifest");
    std::string ev_corpus, ev_results, ev_out;
    ev->add_option("--corpus", ev_corpus, "Corpus directory with manifest.json")->required();
    ev->add_option("--results", ev_results, "Directory of detection reports")->required();
    ev->add_option("--out", ev_out, "Write the eval report JSON here");

    // plot
    auto* pl = app.add_subcommand("plot", "Render SVG from a detection report");
    std::string pl_report, pl_out = "plot.svg";
    pl->add_option("report", pl_report, "Detection report JSON")->required();
    pl->add_option("--out", pl_out, "Output SVG path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed())
            return cmd_generate(gen_out, gen_count, gen_pos_frac, gen_mix, synth,
                                anomaly_samples, gen_seed);
        if (det->parsed()) {
            qpcd::PipelineConfig cfg =
                make_config(det_config, det_sets, det_seed, det_seed_opt->count() > 0, det_exact);
            return cmd_detect(det_input, det_out, det_rate, cfg, det_svg, det_cloud, det_series);
        }
        if (ev->parsed()) return cmd_eval(ev_corpus, ev_results, ev_out);
        if (pl->parsed()) return cmd_plot(pl_report, pl_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
