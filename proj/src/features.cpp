#include "ser/features.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <unsupported/Eigen/FFT>

namespace ser {

namespace {

double sq(double v) { return v * v; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Entropy in bits of the energies of equal-length blocks, normalized by the total.
double block_entropy(std::span<const double> v)
{
    const std::size_t block = v.size() / lld::kEnergySubBlocks;
    if (block == 0) return 0.0;
    // trailing samples that do not fill a block are dropped from the total too
    double total = 0.0;
    for (std::size_t i = 0; i < block * lld::kEnergySubBlocks; ++i) total += sq(v[i]);
    double h = 0.0;
    for (int j = 0; j < lld::kEnergySubBlocks; ++j) {
        double e = 0.0;
        for (std::size_t i = j * block; i < (j + 1) * block; ++i) e += sq(v[i]);
        e /= total + lld::kEps;
        h -= e * std::log2(e + lld::kEps);
    }
    return h;
}

class Spectrum {
public:
    explicit Spectrum(std::size_t frame_length) : window_(frame_length), buf_(frame_length)
    {
        if (frame_length == 1) {
            window_[0] = 1.0;
            return;
        }
        for (std::size_t i = 0; i < frame_length; ++i)
            window_[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / (frame_length - 1));
    }

    std::vector<double> magnitude(std::span<const double> frame)
    {
        if (frame.size() != window_.size()) throw std::invalid_argument("frame length changed between calls");
        for (std::size_t i = 0; i < frame.size(); ++i) buf_[i] = frame[i] * window_[i];
        fft_.fwd(out_, buf_);
        const std::size_t bins = frame.size() / 2;
        std::vector<double> mag(bins);
        for (std::size_t k = 0; k < bins; ++k) mag[k] = std::abs(out_[k]) / static_cast<double>(bins);
        return mag;
    }

private:
    std::vector<double> window_;
    std::vector<double> buf_;
    std::vector<std::complex<double>> out_;
    Eigen::FFT<double> fft_;
};

}  // namespace

FrameSpec FrameSpec::from_millis(int sample_rate, double frame_ms, double hop_ms)
{
    FrameSpec s;
    s.frame_length = static_cast<std::size_t>(std::lround(sample_rate * frame_ms / 1000.0));
    s.hop_length = static_cast<std::size_t>(std::lround(sample_rate * hop_ms / 1000.0));
    s.validate();
    return s;
}

void FrameSpec::validate() const
{
    if (frame_length < 2) throw std::invalid_argument("frame length must be at least 2 samples");
    if (hop_length < 1) throw std::invalid_argument("hop length must be at least 1 sample");
    if (hop_length > frame_length) throw std::invalid_argument("hop length exceeds frame length");
}

const std::array<std::string, kPaaLldCount>& paa_descriptor_names()
{
    static const auto names = [] {
        std::array<std::string, kPaaLldCount> n;
        std::size_t i = 0;
        for (const char* s : {"zcr", "energy", "energy_entropy", "spectral_centroid", "spectral_spread",
                              "spectral_entropy", "spectral_flux", "spectral_rolloff"})
            n[i++] = s;
        for (int k = 1; k <= lld::kMfccCount; ++k) n[i++] = "mfcc_" + std::to_string(k);
        for (int k = 1; k <= 12; ++k) n[i++] = "chroma_" + std::to_string(k);
        n[i++] = "chroma_std";
        return n;
    }();
    return names;
}

std::string_view to_string(FeatureSource s)
{
    switch (s) {
    case FeatureSource::Paa: return "paa";
    case FeatureSource::Gemaps: return "gemaps";
    case FeatureSource::External: return "external";
    }
    return "external";
}

std::vector<std::span<const double>> frame_signal(const Waveform& w, const FrameSpec& spec)
{
    spec.validate();
    if (w.samples.size() < spec.frame_length)
        throw std::invalid_argument("signal of " + std::to_string(w.samples.size()) +
                                    " samples is shorter than one frame of " + std::to_string(spec.frame_length));
    const std::size_t count = (w.samples.size() - spec.frame_length) / spec.hop_length + 1;
    std::vector<std::span<const double>> frames;
    frames.reserve(count);
    for (std::size_t f = 0; f < count; ++f)
        frames.emplace_back(w.samples.data() + f * spec.hop_length, spec.frame_length);
    return frames;
}

LldMatrix extract_paa_llds(const Waveform& w, const FrameSpec& spec)
{
    w.validate();
    const auto frames = frame_signal(w, spec);
    Spectrum spectrum(spec.frame_length);
    const Eigen::MatrixXd bank = lld::mel_filterbank(spec.frame_length / 2, w.sample_rate);
    const double nyquist = w.sample_rate / 2.0;

    LldMatrix out;
    out.values.resize(static_cast<Eigen::Index>(frames.size()), kPaaLldCount);
    out.descriptor_names.assign(paa_descriptor_names().begin(), paa_descriptor_names().end());

    std::vector<double> prev;
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto frame = frames[f];
        const auto mag = spectrum.magnitude(frame);
        auto row = out.values.row(static_cast<Eigen::Index>(f));

        const auto [centroid, spread] = lld::spectral_centroid_spread(mag, w.sample_rate);
        row(0) = lld::zero_crossing_rate(frame);
        row(1) = lld::energy(frame);
        row(2) = lld::energy_entropy(frame);
        row(3) = centroid / nyquist;
        row(4) = spread / nyquist;
        row(5) = lld::spectral_entropy(mag);
        row(6) = f == 0 ? 0.0 : lld::spectral_flux(mag, prev);
        row(7) = lld::spectral_rolloff(mag);
        const auto cep = lld::mfcc(mag, bank);
        for (int k = 0; k < lld::kMfccCount; ++k) row(8 + k) = cep[k];
        const auto chroma = lld::chroma(mag, w.sample_rate);
        for (int k = 0; k < 12; ++k) row(8 + lld::kMfccCount + k) = chroma[k];
        row(kPaaLldCount - 1) = lld::chroma_deviation(chroma);

        prev = mag;
    }
    return out;
}

FeatureVector pool_hsf(const LldMatrix& llds, FeatureSource source)
{
    const auto n = llds.values.rows();
    const auto d = llds.values.cols();
    if (n == 0 || d == 0) throw std::invalid_argument("cannot pool an empty descriptor matrix");
    FeatureVector fv;
    fv.source = source;
    fv.values.resize(static_cast<std::size_t>(2 * d));
    for (Eigen::Index j = 0; j < d; ++j) {
        const auto col = llds.values.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().mean();
        fv.values[static_cast<std::size_t>(j)] = mean;
        fv.values[static_cast<std::size_t>(d + j)] = std::sqrt(var);
    }
    return fv;
}

FeatureVector paa_features(const Waveform& w, const FrameSpec& spec)
{
    return pool_hsf(extract_paa_llds(w, spec), FeatureSource::Paa);
}

namespace lld {

double zero_crossing_rate(std::span<const double> frame)
{
    if (frame.size() < 2) return 0.0;
    std::size_t changes = 0;
    for (std::size_t i = 1; i < frame.size(); ++i)
        if ((frame[i] < 0.0) != (frame[i - 1] < 0.0)) ++changes;
    return static_cast<double>(changes) / static_cast<double>(frame.size() - 1);
}

double energy(std::span<const double> frame)
{
    double e = 0.0;
    for (double x : frame) e += sq(x);
    return e / static_cast<double>(frame.size());
}

double energy_entropy(std::span<const double> frame) { return block_entropy(frame); }

std::vector<double> magnitude_spectrum(std::span<const double> frame)
{
    Spectrum s(frame.size());
    return s.magnitude(frame);
}

std::pair<double, double> spectral_centroid_spread(std::span<const double> mag, int sample_rate)
{
    const double bin_hz = sample_rate / (2.0 * static_cast<double>(mag.size()));
    double num = 0.0;
    double den = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        num += k * bin_hz * mag[k];
        den += mag[k];
    }
    den += kEps;
    const double centroid = num / den;
    double spread = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) spread += sq(k * bin_hz - centroid) * mag[k];
    return {centroid, std::sqrt(spread / den)};
}

double spectral_entropy(std::span<const double> mag) { return block_entropy(mag); }

double spectral_flux(std::span<const double> mag, std::span<const double> prev)
{
    if (mag.size() != prev.size()) throw std::invalid_argument("spectra differ in size");
    const double s = std::accumulate(mag.begin(), mag.end(), 0.0) + kEps;
    const double p = std::accumulate(prev.begin(), prev.end(), 0.0) + kEps;
    double flux = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) flux += sq(mag[k] / s - prev[k] / p);
    return flux;
}

double spectral_rolloff(std::span<const double> mag)
{
    double total = 0.0;
    for (double m : mag) total += sq(m);
    const double threshold = kRolloffFraction * total;
    double cum = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        cum += sq(mag[k]);
        if (cum > threshold) return static_cast<double>(k) / static_cast<double>(mag.size());
    }
    return 0.0;
}

Eigen::MatrixXd mel_filterbank(std::size_t bins, int sample_rate)
{
    const double nyquist = sample_rate / 2.0;
    const double bin_hz = nyquist / static_cast<double>(bins);
    const double top = hz_to_mel(nyquist);
    std::array<double, kMelBands + 2> edges{};
    for (int i = 0; i < kMelBands + 2; ++i) edges[i] = mel_to_hz(top * i / (kMelBands + 1));

    Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(kMelBands, static_cast<Eigen::Index>(bins));
    for (int m = 0; m < kMelBands; ++m) {
        const double lo = edges[m], centre = edges[m + 1], hi = edges[m + 2];
        for (std::size_t k = 0; k < bins; ++k) {
            const double f = k * bin_hz;
            double wgt = 0.0;
            if (f >= lo && f <= centre && centre > lo)
                wgt = (f - lo) / (centre - lo);
            else if (f > centre && f <= hi && hi > centre)
                wgt = (hi - f) / (hi - centre);
            bank(m, static_cast<Eigen::Index>(k)) = wgt;
        }
    }
    return bank;
}

std::array<double, kMfccCount> mfcc(std::span<const double> mag, const Eigen::MatrixXd& filterbank)
{
    if (static_cast<std::size_t>(filterbank.cols()) != mag.size())
        throw std::invalid_argument("filterbank does not match spectrum size");
    const Eigen::Map<const Eigen::VectorXd> spec(mag.data(), static_cast<Eigen::Index>(mag.size()));
    const Eigen::VectorXd bands = filterbank * spec;
    std::array<double, kMelBands> logs{};
    for (int m = 0; m < kMelBands; ++m) logs[m] = std::log10(std::max(bands(m), kLogFloor));

    std::array<double, kMfccCount> out{};
    const double m_count = kMelBands;
    for (int k = 0; k < kMfccCount; ++k) {
        double acc = 0.0;
        for (int m = 0; m < kMelBands; ++m) acc += logs[m] * std::cos(std::numbers::pi * k * (2 * m + 1) / (2.0 * m_count));
        out[k] = acc * (k == 0 ? std::sqrt(1.0 / m_count) : std::sqrt(2.0 / m_count));
    }
    return out;
}

std::array<double, 12> chroma(std::span<const double> mag, int sample_rate)
{
    const double bin_hz = sample_rate / (2.0 * static_cast<double>(mag.size()));
    std::array<double, 12> c{};
    double total = 0.0;
    for (std::size_t k = 0; k < mag.size(); ++k) {
        const double e = sq(mag[k]);
        total += e;
        const double f = k * bin_hz;
        if (f < kChromaMinHz) continue;
        const long semis = std::lround(12.0 * std::log2(f / kChromaMinHz));
        c[static_cast<std::size_t>(semis % 12)] += e;
    }
    for (double& v : c) v /= total + kEps;
    return c;
}

double chroma_deviation(const std::array<double, 12>& c)
{
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / 12.0;
    double var = 0.0;
    for (double v : c) var += sq(v - mean);
    return std::sqrt(var / 12.0);
}

}  // namespace lld

}  // namespace ser
