#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "qpcd/signal.hpp"

namespace qpcd {

// Deterministic synthetic corpus: clean quasi-periodic series plus series
// with one injected arrhythmia episode each, kinds cycling through `mix`.
struct CorpusParams {
    std::size_t count = 84;
    double positive_fraction = 0.5;
    std::vector<ArrhythmiaKind> mix;  // empty: all six kinds
    SynthesisParams synth{120.0, 4, 0.0, 0.03, 2560, 160.0, 0};
    std::size_t anomaly_samples = 480;
    std::uint64_t seed = 0;
};

struct CorpusEntry {
    AnnotatedSeries series;
    std::string file;  // basename, e.g. "s007.csv"
    std::uint64_t seed = 0;
    bool positive = false;
    std::string kind;  // empty for clean series
};

std::vector<CorpusEntry> generate_corpus(const CorpusParams& params);

// Writes one CSV per entry plus manifest.json into dir (created if absent).
void write_corpus(const std::vector<CorpusEntry>& corpus, const CorpusParams& params,
                  const std::string& dir);

nlohmann::json corpus_manifest(const std::vector<CorpusEntry>& corpus,
                               const CorpusParams& params);

}  // namespace qpcd
