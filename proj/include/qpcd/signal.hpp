#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace qpcd {

struct Annotation {
    std::size_t start = 0;   // inclusive
    std::size_t end = 0;     // exclusive
    std::string label;
};

// Raw 1-D signal with sampling metadata and optional ground-truth intervals.
struct AnnotatedSeries {
    std::vector<double> samples;
    double sample_rate = 0.0;
    std::vector<Annotation> annotations;
    std::string name;

    std::size_t size() const { return samples.size(); }
};

struct SynthesisParams {
    double heart_rate_bpm = 60.0;     // [40, 220]
    int wavelet_order = 4;            // Daubechies family index, >= 2
    double noise_mu = 0.0;
    double noise_sigma = 0.0;
    std::size_t duration_samples = 0;
    double sample_rate = 360.0;
    std::uint64_t seed = 0;

    std::size_t beat_period() const;
};

enum class ArrhythmiaKind {
    AtrialFlutter,
    AtrialFibrillation,
    SupraventricularTachycardia,
    PrematureAtrialContraction,
    VentricularRhythm,
    RandomAnomaly,
};

const char* to_string(ArrhythmiaKind kind);
std::optional<ArrhythmiaKind> arrhythmia_from_string(const std::string& name);

struct ArrhythmiaSpec {
    ArrhythmiaKind kind = ArrhythmiaKind::RandomAnomaly;
    std::size_t start_index = 0;
    std::size_t length_samples = 0;
};

// Daubechies scaling/wavelet functions sampled on a dyadic grid via the
// cascade algorithm. Order N uses the 2N-tap orthonormal filter.
class DaubechiesWavelet {
public:
    explicit DaubechiesWavelet(int order, int refine_levels = 10);

    int order() const { return order_; }
    double support() const { return support_; }

    // Linear interpolation on the cascade grid; zero outside [0, support].
    double scaling(double t) const;
    double wavelet(double t) const;

    // Location and value of the wavelet's absolute maximum.
    double peak_location() const { return peak_loc_; }
    double peak_value() const { return peak_val_; }

private:
    int order_;
    double support_;
    double grid_step_;
    std::vector<double> phi_;
    std::vector<double> psi_;
    double peak_loc_ = 0.0;
    double peak_val_ = 0.0;
};

// One P-QRS-T complex of `period` samples built from wavelet atoms.
std::vector<double> beat_template(const DaubechiesWavelet& wav, std::size_t period,
                                  bool suppress_p = false, double amplitude_scale = 1.0);

AnnotatedSeries synthesize_normal(const SynthesisParams& params);

AnnotatedSeries inject_arrhythmia(const AnnotatedSeries& series, const ArrhythmiaSpec& spec,
                                  const SynthesisParams& params);

AnnotatedSeries synthesize_plain_periodic(double freq_hz, std::size_t duration_samples,
                                          double sample_rate, double noise_sigma,
                                          std::uint64_t seed);

struct CsvFormat {
    double sample_rate = 0.0;
    bool has_header = true;
};

AnnotatedSeries load_csv(const std::string& path, const CsvFormat& format);
void save_csv(const AnnotatedSeries& series, const std::string& path);

}  // namespace qpcd
