#include "qpcd/corpus.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "qpcd/rng.hpp"

namespace qpcd {

using nlohmann::json;

std::vector<CorpusEntry> generate_corpus(const CorpusParams& params) {
    if (params.positive_fraction < 0.0 || params.positive_fraction > 1.0)
        throw std::invalid_argument("positive_fraction must lie in [0, 1]");
    std::vector<ArrhythmiaKind> mix = params.mix;
    if (mix.empty())
        mix = {ArrhythmiaKind::AtrialFlutter,
               ArrhythmiaKind::AtrialFibrillation,
               ArrhythmiaKind::SupraventricularTachycardia,
               ArrhythmiaKind::PrematureAtrialContraction,
               ArrhythmiaKind::VentricularRhythm,
               ArrhythmiaKind::RandomAnomaly};

    const std::size_t n_pos = static_cast<std::size_t>(
        std::llround(params.positive_fraction * static_cast<double>(params.count)));
    const std::size_t period = params.synth.beat_period();
    const std::size_t margin = 4 * period;

    std::vector<CorpusEntry> corpus;
    corpus.reserve(params.count);
    for (std::size_t i = 0; i < params.count; ++i) {
        CorpusEntry entry;
        entry.seed = mix64(params.seed, i);
        entry.positive = i < n_pos;

        SynthesisParams sp = params.synth;
        sp.seed = entry.seed;
        entry.series = synthesize_normal(sp);

        if (entry.positive) {
            ArrhythmiaSpec spec;
            spec.kind = mix[i % mix.size()];
            spec.length_samples = params.anomaly_samples;
            if (sp.duration_samples < 2 * margin + params.anomaly_samples)
                throw std::invalid_argument("series too short for the anomaly plus margins");
            const std::size_t room = sp.duration_samples - 2 * margin - params.anomaly_samples;
            auto rng = make_engine(entry.seed, 1);
            spec.start_index =
                margin + (room > 0 ? std::uniform_int_distribution<std::size_t>(0, room)(rng) : 0);
            entry.series = inject_arrhythmia(entry.series, spec, sp);
            entry.kind = to_string(spec.kind);
        }

        char name[32];
        std::snprintf(name, sizeof(name), "s%03zu.csv", i);
        entry.file = name;
        entry.series.name = name;
        corpus.push_back(std::move(entry));
    }
    return corpus;
}

json corpus_manifest(const std::vector<CorpusEntry>& corpus, const CorpusParams& params) {
    json series = json::array();
    for (const CorpusEntry& entry : corpus) {
        json anns = json::array();
        for (const Annotation& ann : entry.series.annotations)
            anns.push_back({ann.start, ann.end, ann.label});
        series.push_back({{"file", entry.file},
                          {"seed", entry.seed},
                          {"positive", entry.positive},
                          {"kind", entry.kind},
                          {"annotations", anns}});
    }
    return json{{"seed", params.seed},
                {"sample_rate", params.synth.sample_rate},
                {"period_samples", params.synth.beat_period()},
                {"count", corpus.size()},
                {"series", series}};
}

void write_corpus(const std::vector<CorpusEntry>& corpus, const CorpusParams& params,
                  const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const CorpusEntry& entry : corpus)
        save_csv(entry.series, (std::filesystem::path(dir) / entry.file).string());
    std::ofstream mf(std::filesystem::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("cannot write manifest in " + dir);
    mf << corpus_manifest(corpus, params).dump(2) << '\n';
}

}  // namespace qpcd
