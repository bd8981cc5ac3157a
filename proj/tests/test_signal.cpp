#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <vector>

#include "qpcd/signal.hpp"

using namespace qpcd;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    out << text;
}

// R peaks: local maxima above half the global maximum.
std::size_t count_peaks(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    double top = 0.0;
    for (std::size_t i = lo; i < hi; ++i) top = std::max(top, x[i]);
    std::size_t count = 0;
    for (std::size_t i = lo + 1; i + 1 < hi; ++i)
        if (x[i] > 0.5 * top && x[i] >= x[i - 1] && x[i] > x[i + 1]) ++count;
    return count;
}

}  // namespace

TEST_CASE("csv loads a minimal value-only file") {
    auto path = temp_file("qpcd_min.csv");
    write_file(path, "index,value\n0,0.0\n1,1.0\n2,0.0\n");
    AnnotatedSeries s = load_csv(path.string(), {360.0});
    CHECK(s.samples == std::vector<double>{0.0, 1.0, 0.0});
    CHECK(s.sample_rate == 360.0);
    CHECK(s.annotations.empty());
}

TEST_CASE("csv parses annotation columns") {
    auto path = temp_file("qpcd_ann.csv");
    std::string text = "index,value,ann_start,ann_end,ann_label\n";
    for (int i = 0; i < 300; ++i)
        text += std::to_string(i) + ",0.5" + (i == 0 ? ",100,200,AFIB\n" : ",,,\n");
    write_file(path, text);
    AnnotatedSeries s = load_csv(path.string(), {250.0});
    REQUIRE(s.annotations.size() == 1);
    CHECK(s.annotations[0].start == 100);
    CHECK(s.annotations[0].end == 200);
    CHECK(s.annotations[0].label == "AFIB");
}

TEST_CASE("csv rejects inverted and out-of-range intervals") {
    auto path = temp_file("qpcd_bad.csv");
    write_file(path, "index,value,ann_start,ann_end,ann_label\n0,0.1,500,400,X\n");
    CHECK_THROWS_WITH_AS(load_csv(path.string(), {100.0}),
                         doctest::Contains("interval end before start"), std::runtime_error);
    write_file(path, "index,value,ann_start,ann_end,ann_label\n0,0.1,0,99,X\n");
    CHECK_THROWS(load_csv(path.string(), {100.0}));
    write_file(path, "index,value\n0,abc\n");
    CHECK_THROWS_WITH_AS(load_csv(path.string(), {100.0}), doctest::Contains("row 2"),
                         std::runtime_error);
    CHECK_THROWS(load_csv("/nonexistent/qpcd.csv", {100.0}));
}

TEST_CASE("csv round-trip preserves samples bitwise and annotations exactly") {
    SynthesisParams params{72.0, 4, 0.0, 0.1, 2000, 360.0, 99};
    AnnotatedSeries s = synthesize_normal(params);
    s = inject_arrhythmia(s, {ArrhythmiaKind::AtrialFlutter, 600, 500}, params);
    auto path = temp_file("qpcd_rt.csv");
    save_csv(s, path.string());
    AnnotatedSeries back = load_csv(path.string(), {s.sample_rate});
    CHECK(back.samples == s.samples);
    REQUIRE(back.annotations.size() == 1);
    CHECK(back.annotations[0].start == 600);
    CHECK(back.annotations[0].end == 1100);
    CHECK(back.annotations[0].label == "atrial_flutter");
}

TEST_CASE("normal synthesis is periodic with the requested beat period") {
    SynthesisParams params{60.0, 4, 0.0, 0.0, 1800, 360.0, 0};
    AnnotatedSeries s = synthesize_normal(params);
    REQUIRE(params.beat_period() == 360);
    for (std::size_t t = 0; t + 360 < s.size(); ++t)
        CHECK(s.samples[t] == doctest::Approx(s.samples[t + 360]).epsilon(1e-9));

    // first non-trivial autocorrelation peak sits at the beat period
    const std::size_t n = s.size();
    double mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / n;
    auto acf = [&](std::size_t lag) {
        double acc = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t)
            acc += (s.samples[t] - mean) * (s.samples[t + lag] - mean);
        return acc / static_cast<double>(n - lag);
    };
    const double at_period = acf(360);
    for (std::size_t lag = 30; lag <= 330; lag += 10) CHECK(acf(lag) < at_period);
}

TEST_CASE("synthesis is deterministic in the seed") {
    SynthesisParams params{75.0, 6, 0.0, 0.08, 1500, 300.0, 1234};
    AnnotatedSeries a = synthesize_normal(params);
    AnnotatedSeries b = synthesize_normal(params);
    CHECK(a.samples == b.samples);
    params.seed = 1235;
    AnnotatedSeries c = synthesize_normal(params);
    CHECK(a.samples != c.samples);
}

TEST_CASE("additive noise has the requested mean") {
    SynthesisParams clean{60.0, 4, 0.0, 0.0, 20000, 360.0, 7};
    SynthesisParams noisy = clean;
    noisy.noise_sigma = 0.05;
    AnnotatedSeries base = synthesize_normal(clean);
    AnnotatedSeries out = synthesize_normal(noisy);
    double acc = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) acc += out.samples[i] - base.samples[i];
    const double mean = acc / static_cast<double>(base.size());
    CHECK(std::abs(mean) <= 3.0 * 0.05 / std::sqrt(static_cast<double>(base.size())));
}

TEST_CASE("synthesis parameter guards") {
    SynthesisParams params{60.0, 4, 0.0, 0.0, 1000, 360.0, 0};
    params.heart_rate_bpm = 30.0;
    CHECK_THROWS(synthesize_normal(params));
    params.heart_rate_bpm = 60.0;
    params.duration_samples = 100;
    CHECK_THROWS(synthesize_normal(params));
    CHECK_THROWS(DaubechiesWavelet(1));
    CHECK_THROWS(DaubechiesWavelet(11));
}

TEST_CASE("tachycardia injection multiplies the local beat frequency") {
    SynthesisParams params{60.0, 4, 0.0, 0.0, 7200, 360.0, 21};
    AnnotatedSeries host = synthesize_normal(params);
    ArrhythmiaSpec spec{ArrhythmiaKind::SupraventricularTachycardia, 1800, 3600};
    AnnotatedSeries out = inject_arrhythmia(host, spec, params);
    const double inside = static_cast<double>(count_peaks(out.samples, 1800, 5400));
    const double outside = static_cast<double>(count_peaks(out.samples, 5400, 7200)) * 2.0;
    // 2.6x beat frequency; amplitude modulation hides some episode peaks
    // from the half-maximum counter, so assert a conservative 1.5x.
    CHECK(inside >= 1.5 * outside);
}

TEST_CASE("injection only touches the annotated interval") {
    SynthesisParams params{60.0, 4, 0.0, 0.02, 3600, 360.0, 5};
    AnnotatedSeries host = synthesize_normal(params);
    ArrhythmiaSpec spec{ArrhythmiaKind::VentricularRhythm, 720, 1080};
    AnnotatedSeries out = inject_arrhythmia(host, spec, params);
    for (std::size_t i = 0; i < host.size(); ++i) {
        if (i >= 720 && i < 1800) continue;
        CHECK(out.samples[i] == host.samples[i]);
    }
    REQUIRE(out.annotations.size() == 1);
    CHECK(out.annotations[0].start == 720);
    CHECK(out.annotations[0].end == 1800);
}

TEST_CASE("injection guards") {
    SynthesisParams params{60.0, 4, 0.0, 0.0, 1000, 360.0, 0};
    AnnotatedSeries host = synthesize_normal(params);
    CHECK_THROWS(inject_arrhythmia(host, {ArrhythmiaKind::AtrialFlutter, 100, 0}, params));
    CHECK_THROWS(inject_arrhythmia(host, {ArrhythmiaKind::AtrialFlutter, 900, 200}, params));
    AnnotatedSeries once = inject_arrhythmia(host, {ArrhythmiaKind::AtrialFlutter, 100, 300}, params);
    CHECK_THROWS(inject_arrhythmia(once, {ArrhythmiaKind::RandomAnomaly, 200, 100}, params));
}

TEST_CASE("plain periodic synthesis is an exact sine") {
    AnnotatedSeries s = synthesize_plain_periodic(1.0, 200, 100.0, 0.0, 0);
    CHECK(s.samples[0] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.samples[25] == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t t = 0; t + 100 < s.size(); ++t)
        CHECK(s.samples[t] == doctest::Approx(s.samples[t + 100]).epsilon(1e-9));
}

TEST_CASE("plain periodic synthesis rejects aliasing frequencies") {
    CHECK_THROWS(synthesize_plain_periodic(100.0, 100, 100.0, 0.0, 0));
    CHECK_THROWS(synthesize_plain_periodic(50.0, 100, 100.0, 0.0, 0));
    CHECK_THROWS(synthesize_plain_periodic(-1.0, 100, 100.0, 0.0, 0));
}

TEST_CASE("arrhythmia kind names round-trip") {
    using K = ArrhythmiaKind;
    for (K k : {K::AtrialFlutter, K::AtrialFibrillation, K::SupraventricularTachycardia,
                K::PrematureAtrialContraction, K::VentricularRhythm, K::RandomAnomaly})
        CHECK(arrhythmia_from_string(to_string(k)) == k);
    CHECK(!arrhythmia_from_string("bogus"));
}
