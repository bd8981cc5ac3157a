#include "qpcd/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qpcd/rng.hpp"

namespace qpcd {

namespace {

// Orthonormal Daubechies scaling filters db2..db10, obtained by spectral
// factorization of the Daubechies polynomial (minimum-phase root choice),
// normalized so the coefficients sum to sqrt(2).
const std::vector<double>& daubechies_filter(int order) {
    static const std::array<std::vector<double>, 9> filters = {{
        {0.48296291314453416, 0.83651630373780783, 0.22414386804201342,
         -0.1294095225512604},
        {0.33267055295008258, 0.80689150931109244, 0.45987750211849154,
         -0.13501102001025458, -0.085441273882026658, 0.035226291885709526},
        {0.23037781330889645, 0.71484657055291556, 0.63088076792985892,
         -0.027983769416859483, -0.187034811719093, 0.030841381835560646,
         0.032883011666885162, -0.010597401785069016},
        {0.16010239797419301, 0.60382926979718998, 0.72430852843777338,
         0.13842814590132074, -0.24229488706638241, -0.032244869584638507,
         0.07757149384004576, -0.0062414902127982796, -0.012580751999082004,
         0.0033357252854737756},
        {0.1115407433501094, 0.49462389039845273, 0.75113390802109525,
         0.31525035170919768, -0.22626469396543944, -0.12976686756726172,
         0.097501605587322862, 0.027522865530305703, -0.031582039317486009,
         0.0005538422011614997, 0.0047772575109455064, -0.0010773010853084792},
        {0.077852054085009226, 0.39653931948191745, 0.72913209084623543,
         0.46978228740519323, -0.14390600392856565, -0.22403618499387476,
         0.071309219266830329, 0.080612609151083106, -0.038029936935014441,
         -0.01657454163066693, 0.012550998556099877, 0.00042957797292136267,
         -0.0018016407040474928, 0.00035371379997452062},
        {0.054415842243103967, 0.31287159091429978, 0.6756307362972892,
         0.58535468365420618, -0.015829105256348078, -0.28401554296154657,
         0.00047248457391295336, 0.12874742662047875, -0.017369301001807808,
         -0.044088253930794616, 0.013981027917398263, 0.0087460940474057454,
         -0.0048703529934515603, -0.00039174037337694824, 0.00067544940645056846,
         -0.00011747678412476935},
        {0.038077947363878317, 0.24383467461259012, 0.60482312369011104,
         0.65728807805129941, 0.13319738582500953, -0.29327378327917569,
         -0.096840783222975013, 0.14854074933810577, 0.030725681479333081,
         -0.067632829061329752, 0.00025094711483129411, 0.022361662123679221,
         -0.0047232047577514527, -0.0042815036824634216, 0.0018476468830562281,
         0.00023038576352319551, -0.00025196318894271018, 3.9347320316271589e-05},
        {0.026670057900555544, 0.18817680007769147, 0.52720118893172574,
         0.68845903945360354, 0.28117234366057708, -0.24984642432731322,
         -0.19594627437737966, 0.12736934033579647, 0.093057364603568199,
         -0.07139414716639432, -0.02945753682187684, 0.033212674059341155,
         0.003606553566956194, -0.010733175483330625, 0.0013953517470529249,
         0.0019924052951850514, -0.00068585669495971108, -0.00011646685512928558,
         9.3588670320069605e-05, -1.3264202894521238e-05},
    }};
    if (order < 2 || order > 10)
        throw std::invalid_argument("wavelet_order must be in [2, 10]");
    return filters[static_cast<std::size_t>(order - 2)];
}

}  // namespace

DaubechiesWavelet::DaubechiesWavelet(int order, int refine_levels) : order_(order) {
    const std::vector<double>& h = daubechies_filter(order);
    const int taps = static_cast<int>(h.size());
    support_ = taps - 1.0;
    const double sqrt2 = std::sqrt(2.0);

    // Values at integer points: fixed point of phi(k) = sqrt(2) sum h[n] phi(2k-n),
    // solved by power iteration of the interior transfer matrix.
    const int interior = taps - 2;
    std::vector<double> phi_int(static_cast<std::size_t>(interior), 1.0 / interior);
    for (int iter = 0; iter < 200; ++iter) {
        std::vector<double> next(static_cast<std::size_t>(interior), 0.0);
        for (int k = 1; k <= interior; ++k) {
            double acc = 0.0;
            for (int n = 0; n < taps; ++n) {
                int m = 2 * k - n;
                if (m >= 1 && m <= interior) acc += h[static_cast<std::size_t>(n)] * phi_int[static_cast<std::size_t>(m - 1)];
            }
            next[static_cast<std::size_t>(k - 1)] = sqrt2 * acc;
        }
        double sum = 0.0;
        for (double v : next) sum += v;
        if (sum != 0.0)
            for (double& v : next) v /= sum;
        phi_int = next;
    }

    // Dyadic refinement of the cascade: phi(t) = sqrt(2) sum h[n] phi(2t-n).
    std::vector<double> phi(static_cast<std::size_t>(taps), 0.0);
    for (int k = 1; k <= interior; ++k) phi[static_cast<std::size_t>(k)] = phi_int[static_cast<std::size_t>(k - 1)];
    double step = 1.0;
    for (int level = 0; level < refine_levels; ++level) {
        step /= 2.0;
        std::size_t n_new = (phi.size() - 1) * 2 + 1;
        std::vector<double> fine(n_new, 0.0);
        for (std::size_t i = 0; i < n_new; ++i) {
            if (i % 2 == 0) {
                fine[i] = phi[i / 2];
                continue;
            }
            double t = static_cast<double>(i) * step;
            double acc = 0.0;
            for (int n = 0; n < taps; ++n) {
                double u = 2.0 * t - n;
                if (u < 0.0 || u > support_) continue;
                // u lies on the coarse grid at the previous resolution
                double idx = u / (2.0 * step);
                std::size_t lo = static_cast<std::size_t>(idx);
                double frac = idx - static_cast<double>(lo);
                double v = phi[lo];
                if (frac > 0.0 && lo + 1 < phi.size()) v = v * (1.0 - frac) + phi[lo + 1] * frac;
                acc += h[static_cast<std::size_t>(n)] * v;
            }
            fine[i] = sqrt2 * acc;
        }
        phi = std::move(fine);
    }
    grid_step_ = step;
    phi_ = std::move(phi);

    // psi(t) = sqrt(2) sum g[n] phi(2t - n), g[n] = (-1)^n h[taps-1-n].
    psi_.assign(phi_.size(), 0.0);
    for (std::size_t i = 0; i < psi_.size(); ++i) {
        double t = static_cast<double>(i) * grid_step_;
        double acc = 0.0;
        for (int n = 0; n < taps; ++n) {
            double u = 2.0 * t - n;
            if (u < 0.0 || u > support_) continue;
            double idx = u / grid_step_;
            std::size_t lo = static_cast<std::size_t>(idx);
            double frac = idx - static_cast<double>(lo);
            double v = phi_[lo];
            if (frac > 0.0 && lo + 1 < phi_.size()) v = v * (1.0 - frac) + phi_[lo + 1] * frac;
            double g = ((n % 2) ? -1.0 : 1.0) * h[static_cast<std::size_t>(taps - 1 - n)];
            acc += g * v;
        }
        psi_[i] = sqrt2 * acc;
    }

    std::size_t arg = 0;
    for (std::size_t i = 1; i < psi_.size(); ++i)
        if (std::abs(psi_[i]) > std::abs(psi_[arg])) arg = i;
    peak_loc_ = static_cast<double>(arg) * grid_step_;
    peak_val_ = psi_[arg];
}

namespace {
double sample_grid(const std::vector<double>& grid, double step, double support, double t) {
    if (t < 0.0 || t > support) return 0.0;
    double idx = t / step;
    std::size_t lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= grid.size()) return grid.back();
    double frac = idx - static_cast<double>(lo);
    return grid[lo] * (1.0 - frac) + grid[lo + 1] * frac;
}
}  // namespace

double DaubechiesWavelet::scaling(double t) const {
    return sample_grid(phi_, grid_step_, support_, t);
}

double DaubechiesWavelet::wavelet(double t) const {
    return sample_grid(psi_, grid_step_, support_, t);
}

std::size_t SynthesisParams::beat_period() const {
    return static_cast<std::size_t>(std::llround(60.0 * sample_rate / heart_rate_bpm));
}

namespace {

struct WaveAtom {
    double center;     // fraction of the beat
    double amplitude;  // relative to R peak
    double width;      // fraction of the beat spanned by the wavelet support
};

// P-QRS-T morphology, amplitudes relative to R. Positions are standard
// textbook fractions of the cardiac cycle.
constexpr WaveAtom kPWave{0.18, 0.15, 0.22};
constexpr WaveAtom kQWave{0.36, -0.10, 0.08};
constexpr WaveAtom kRWave{0.40, 1.00, 0.10};
constexpr WaveAtom kSWave{0.44, -0.15, 0.08};
constexpr WaveAtom kTWave{0.70, 0.30, 0.30};

void add_atom(std::vector<double>& beat, const DaubechiesWavelet& wav, const WaveAtom& atom,
              double scale) {
    const std::size_t period = beat.size();
    const double span = wav.support();
    for (std::size_t i = 0; i < period; ++i) {
        double x = static_cast<double>(i) / static_cast<double>(period);
        double u = wav.peak_location() + (x - atom.center) / atom.width * span;
        beat[i] += scale * atom.amplitude * wav.wavelet(u) / wav.peak_value();
    }
}

}  // namespace

std::vector<double> beat_template(const DaubechiesWavelet& wav, std::size_t period,
                                  bool suppress_p, double amplitude_scale) {
    std::vector<double> beat(period, 0.0);
    if (!suppress_p) add_atom(beat, wav, kPWave, amplitude_scale);
    add_atom(beat, wav, kQWave, amplitude_scale);
    add_atom(beat, wav, kRWave, amplitude_scale);
    add_atom(beat, wav, kSWave, amplitude_scale);
    add_atom(beat, wav, kTWave, amplitude_scale);
    return beat;
}

AnnotatedSeries synthesize_normal(const SynthesisParams& params) {
    if (params.heart_rate_bpm < 40.0 || params.heart_rate_bpm > 220.0)
        throw std::invalid_argument("heart_rate_bpm must lie in [40, 220]");
    if (params.sample_rate <= 0.0) throw std::invalid_argument("sample_rate must be positive");
    if (params.noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");
    const std::size_t period = params.beat_period();
    if (params.duration_samples < period)
        throw std::invalid_argument("duration shorter than one beat period");

    DaubechiesWavelet wav(params.wavelet_order);
    std::vector<double> beat = beat_template(wav, period);

    AnnotatedSeries out;
    out.sample_rate = params.sample_rate;
    out.samples.resize(params.duration_samples);
    for (std::size_t i = 0; i < params.duration_samples; ++i)
        out.samples[i] = beat[i % period];

    if (params.noise_sigma > 0.0 || params.noise_mu != 0.0) {
        auto eng = make_engine(params.seed);
        std::normal_distribution<double> noise(params.noise_mu, params.noise_sigma);
        for (double& v : out.samples) v += noise(eng);
    }
    return out;
}

namespace {

struct KindPreset {
    double rate_multiplier;
    bool suppress_p;
    double rr_jitter;  // relative sd of the per-beat period
    double amplitude_scale;
};

KindPreset preset_for(ArrhythmiaKind kind) {
    switch (kind) {
        case ArrhythmiaKind::AtrialFlutter:
            return {1.5, true, 0.02, 0.9};
        case ArrhythmiaKind::AtrialFibrillation:
            return {1.3, true, 0.18, 0.85};
        case ArrhythmiaKind::SupraventricularTachycardia:
            return {2.6, true, 0.02, 1.0};
        case ArrhythmiaKind::PrematureAtrialContraction:
            return {1.1, false, 0.30, 1.0};
        case ArrhythmiaKind::VentricularRhythm:
            return {0.7, true, 0.05, 1.6};
        case ArrhythmiaKind::RandomAnomaly:
            return {1.0, false, 0.0, 1.0};  // handled separately
    }
    throw std::logic_error("unknown arrhythmia kind");
}

}  // namespace

const char* to_string(ArrhythmiaKind kind) {
    switch (kind) {
        case ArrhythmiaKind::AtrialFlutter: return "atrial_flutter";
        case ArrhythmiaKind::AtrialFibrillation: return "atrial_fibrillation";
        case ArrhythmiaKind::SupraventricularTachycardia: return "supraventricular_tachycardia";
        case ArrhythmiaKind::PrematureAtrialContraction: return "premature_atrial_contraction";
        case ArrhythmiaKind::VentricularRhythm: return "ventricular_rhythm";
        case ArrhythmiaKind::RandomAnomaly: return "random_anomaly";
    }
    return "unknown";
}

std::optional<ArrhythmiaKind> arrhythmia_from_string(const std::string& name) {
    using K = ArrhythmiaKind;
    for (K k : {K::AtrialFlutter, K::AtrialFibrillation, K::SupraventricularTachycardia,
                K::PrematureAtrialContraction, K::VentricularRhythm, K::RandomAnomaly})
        if (name == to_string(k)) return k;
    return std::nullopt;
}

AnnotatedSeries inject_arrhythmia(const AnnotatedSeries& series, const ArrhythmiaSpec& spec,
                                  const SynthesisParams& params) {
    if (spec.length_samples == 0) throw std::invalid_argument("length_samples must be positive");
    const std::size_t start = spec.start_index;
    const std::size_t end = start + spec.length_samples;
    if (end > series.samples.size() || start >= end)
        throw std::invalid_argument("arrhythmia interval out of series bounds");
    for (const Annotation& ann : series.annotations)
        if (start < ann.end && ann.start < end)
            throw std::invalid_argument("arrhythmia interval overlaps an existing annotation");

    AnnotatedSeries out = series;
    const std::size_t host_period = params.beat_period();
    DaubechiesWavelet wav(params.wavelet_order);
    auto eng = make_engine(params.seed, mix64(start, static_cast<std::uint64_t>(spec.kind)));
    std::normal_distribution<double> jitter(0.0, 1.0);
    std::uniform_real_distribution<double> uni(0.5, 1.5);

    const KindPreset preset = preset_for(spec.kind);
    const bool random_kind = spec.kind == ArrhythmiaKind::RandomAnomaly;

    std::size_t pos = start;
    while (pos < end) {
        double period_f;
        double amp;
        bool suppress_p = preset.suppress_p;
        if (random_kind) {
            period_f = static_cast<double>(host_period) * uni(eng);
            amp = uni(eng);
        } else {
            period_f = static_cast<double>(host_period) / preset.rate_multiplier *
                       (1.0 + preset.rr_jitter * jitter(eng));
            amp = preset.amplitude_scale;
        }
        std::size_t period = static_cast<std::size_t>(std::max<long long>(8, std::llround(period_f)));
        std::vector<double> beat = beat_template(wav, period, suppress_p, amp);
        std::size_t n = std::min(period, end - pos);
        std::copy(beat.begin(), beat.begin() + static_cast<std::ptrdiff_t>(n),
                  out.samples.begin() + static_cast<std::ptrdiff_t>(pos));
        pos += n;
    }

    if (params.noise_sigma > 0.0 || params.noise_mu != 0.0) {
        std::normal_distribution<double> noise(params.noise_mu, params.noise_sigma);
        for (std::size_t i = start; i < end; ++i) out.samples[i] += noise(eng);
    }

    out.annotations.push_back({start, end, to_string(spec.kind)});
    std::sort(out.annotations.begin(), out.annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.start < b.start; });
    return out;
}

AnnotatedSeries synthesize_plain_periodic(double freq_hz, std::size_t duration_samples,
                                          double sample_rate, double noise_sigma,
                                          std::uint64_t seed) {
    if (freq_hz <= 0.0) throw std::invalid_argument("freq_hz must be positive");
    if (freq_hz >= sample_rate / 2.0)
        throw std::invalid_argument("freq_hz must be below the Nyquist rate");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be non-negative");

    AnnotatedSeries out;
    out.sample_rate = sample_rate;
    out.samples.resize(duration_samples);
    const double omega = 2.0 * M_PI * freq_hz / sample_rate;
    for (std::size_t i = 0; i < duration_samples; ++i)
        out.samples[i] = std::sin(omega * static_cast<double>(i));
    if (noise_sigma > 0.0) {
        auto eng = make_engine(seed);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (double& v : out.samples) v += noise(eng);
    }
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_double(const std::string& cell, std::size_t row, const char* what) {
    const char* begin = cell.c_str();
    char* parse_end = nullptr;
    double v = std::strtod(begin, &parse_end);
    if (parse_end == begin || *parse_end != '\0')
        throw std::runtime_error("non-numeric " + std::string(what) + " at row " +
                                 std::to_string(row));
    return v;
}

std::size_t parse_index(const std::string& cell, std::size_t row, const char* what) {
    double v = parse_double(cell, row, what);
    if (v < 0.0 || v != std::floor(v))
        throw std::runtime_error(std::string(what) + " is not a non-negative integer at row " +
                                 std::to_string(row));
    return static_cast<std::size_t>(v);
}

}  // namespace

AnnotatedSeries load_csv(const std::string& path, const CsvFormat& format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open file: " + path);

    AnnotatedSeries out;
    out.sample_rate = format.sample_rate;
    out.name = path;

    std::string line;
    std::size_t row = 0;
    bool header_pending = format.has_header;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() < 2) throw std::runtime_error("missing value column at row " + std::to_string(row));
        out.samples.push_back(parse_double(cells[1], row, "value"));
        if (cells.size() >= 5 && !cells[2].empty()) {
            Annotation ann;
            ann.start = parse_index(cells[2], row, "ann_start");
            ann.end = parse_index(cells[3], row, "ann_end");
            ann.label = cells[4];
            if (ann.end <= ann.start)
                throw std::runtime_error("interval end before start at row " + std::to_string(row));
            out.annotations.push_back(ann);
        }
    }
    if (out.samples.empty()) throw std::runtime_error("empty series: " + path);
    for (const Annotation& ann : out.annotations)
        if (ann.end > out.samples.size())
            throw std::runtime_error("annotation interval out of bounds in " + path);
    std::sort(out.annotations.begin(), out.annotations.end(),
              [](const Annotation& a, const Annotation& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < out.annotations.size(); ++i)
        if (out.annotations[i].start < out.annotations[i - 1].end)
            throw std::runtime_error("overlapping annotation intervals in " + path);
    return out;
}

void save_csv(const AnnotatedSeries& series, const std::string& path) {
    std::ofstream outf(path);
    if (!outf) throw std::runtime_error("cannot write file: " + path);
    outf << "index,value,ann_start,ann_end,ann_label\n";
    char buf[64];
    for (std::size_t i = 0; i < series.samples.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.samples[i]);
        outf << i << ',' << buf;
        if (i < series.annotations.size()) {
            const Annotation& ann = series.annotations[i];
            outf << ',' << ann.start << ',' << ann.end << ',' << ann.label;
        } else {
            outf << ",,,";
        }
        outf << '\n';
    }
    if (!outf) throw std::runtime_error("write failure: " + path);
}

}  // namespace qpcd
