#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ser/wav.hpp"

namespace ser {

/// Frame length and hop, both in samples.
struct FrameSpec {
    std::size_t frame_length = 0;
    std::size_t hop_length = 0;

    /// 50 ms frames with a 25 ms hop.
    static FrameSpec from_millis(int sample_rate, double frame_ms = 50.0, double hop_ms = 25.0);
    void validate() const;
};

inline constexpr std::size_t kPaaLldCount = 34;
inline constexpr std::size_t kPaaHsfDim = 2 * kPaaLldCount;
inline constexpr std::size_t kGemapsHsfDim = 46;

/// Column order of the pAA descriptor matrix:
/// ZCR, energy, energy entropy, spectral centroid, spectral spread,
/// spectral entropy, spectral flux, spectral rolloff, MFCC 1-13,
/// chroma 1-12, chroma deviation.
const std::array<std::string, kPaaLldCount>& paa_descriptor_names();

struct LldMatrix {
    Eigen::MatrixXd values;  // frames x descriptors
    std::vector<std::string> descriptor_names;

    std::size_t frames() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t descriptors() const { return static_cast<std::size_t>(values.cols()); }
};

enum class FeatureSource { Paa, Gemaps, External };

std::string_view to_string(FeatureSource s);

/// Pooled utterance features laid out as [mean_1..mean_d, std_1..std_d].
struct FeatureVector {
    std::vector<double> values;
    FeatureSource source = FeatureSource::External;
};

/// Frame count is floor((len - frame) / hop) + 1; a trailing partial frame is dropped.
std::vector<std::span<const double>> frame_signal(const Waveform& w, const FrameSpec& spec);

LldMatrix extract_paa_llds(const Waveform& w, const FrameSpec& spec);

/// Population mean and standard deviation of each column.
FeatureVector pool_hsf(const LldMatrix& llds, FeatureSource source = FeatureSource::Paa);

/// Convenience: load_wav -> extract_paa_llds -> pool_hsf.
FeatureVector paa_features(const Waveform& w, const FrameSpec& spec);

/// Individual descriptors, exposed for testing and reuse. Spectra are the
/// one-sided magnitude spectra produced by magnitude_spectrum().
namespace lld {

inline constexpr int kEnergySubBlocks = 10;
inline constexpr double kRolloffFraction = 0.90;
inline constexpr int kMelBands = 40;
inline constexpr int kMfccCount = 13;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kChromaMinHz = 27.5;
inline constexpr double kEps = 1e-8;

/// Fraction of adjacent sample pairs whose sign differs, in [0, 1].
double zero_crossing_rate(std::span<const double> frame);
/// Mean square amplitude.
double energy(std::span<const double> frame);
/// Entropy (bits) of the normalized energies of kEnergySubBlocks sub-frames.
double energy_entropy(std::span<const double> frame);

/// Hamming-windowed DFT magnitudes for bins 0..N/2-1, divided by N/2.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

/// Centroid and spread in Hz given bin k at k*sample_rate/N (N = 2*spectrum size).
std::pair<double, double> spectral_centroid_spread(std::span<const double> mag, int sample_rate);
/// Entropy (bits) of the energy of kEnergySubBlocks equal bin groups; log2(10) when flat.
double spectral_entropy(std::span<const double> mag);
/// Squared distance between the sum-normalized spectra of consecutive frames.
double spectral_flux(std::span<const double> mag, std::span<const double> prev);
/// First bin whose cumulative energy exceeds kRolloffFraction of the total, as a fraction of the bin count.
double spectral_rolloff(std::span<const double> mag);

/// Triangular mel filterbank, kMelBands x bins, covering 0 Hz to Nyquist.
Eigen::MatrixXd mel_filterbank(std::size_t bins, int sample_rate);
/// log10 of the filterbank energies followed by an orthonormal DCT-II; first kMfccCount coefficients.
std::array<double, kMfccCount> mfcc(std::span<const double> mag, const Eigen::MatrixXd& filterbank);

/// Spectral energy folded into 12 pitch classes (class 0 = A), normalized by total energy.
std::array<double, 12> chroma(std::span<const double> mag, int sample_rate);
double chroma_deviation(const std::array<double, 12>& c);

}  // namespace lld

}  // namespace ser
