#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ser {

/// Mono signal with amplitudes in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate = 0;

    /// Throws std::invalid_argument when empty, non-positive rate or non-finite samples.
    void validate() const;
};

class WavError : public std::runtime_error {
public:
    enum class Kind { MissingFile, UnsupportedCodec, Truncated, Malformed };

    WavError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Reads a RIFF/WAVE file holding 16-bit PCM or 32-bit IEEE float data.
/// Channels are averaged; integer PCM is divided by 2^(bits-1).
Waveform load_wav(const std::filesystem::path& path);

/// Writes 16-bit mono PCM. Samples are clipped to [-1, 1] and scaled by 32767.
void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w);

}  // namespace ser
