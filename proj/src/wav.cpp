#include "ser/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

namespace ser {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t read_u32(const unsigned char* p)
{
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::ostream& os, std::uint16_t v)
{
    const char b[2] = {static_cast<char>(v & 0xFF), static_cast<char>(v >> 8)};
    os.write(b, 2);
}

void put_u32(std::ostream& os, std::uint32_t v)
{
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

struct FmtChunk {
    std::uint16_t format = 0;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
};

}  // namespace

void Waveform::validate() const
{
    if (samples.empty()) throw std::invalid_argument("waveform has no samples");
    if (sample_rate <= 0) throw std::invalid_argument("waveform sample rate must be positive");
    for (double s : samples)
        if (!std::isfinite(s)) throw std::invalid_argument("waveform contains a non-finite sample");
}

Waveform load_wav(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw WavError(WavError::Kind::MissingFile, "cannot open " + path.string());
    const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto name = path.string();
    if (bytes.size() < 12) throw WavError(WavError::Kind::Truncated, name + ": shorter than a RIFF header");
    if (std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw WavError(WavError::Kind::Malformed, name + ": not a RIFF/WAVE file");

    std::optional<FmtChunk> fmt;
    const unsigned char* data = nullptr;
    std::size_t data_size = 0;

    std::size_t pos = 12;
    while (pos < bytes.size()) {
        if (pos + 8 > bytes.size()) throw WavError(WavError::Kind::Truncated, name + ": truncated chunk header");
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t size = read_u32(hdr + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) throw WavError(WavError::Kind::Truncated, name + ": truncated chunk body");

        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (size < 16) throw WavError(WavError::Kind::Malformed, name + ": fmt chunk too small");
            const unsigned char* p = bytes.data() + body;
            FmtChunk f;
            f.format = read_u16(p);
            f.channels = read_u16(p + 2);
            f.sample_rate = read_u32(p + 4);
            f.bits = read_u16(p + 14);
            if (f.format == kFormatExtensible) {
                if (size < 40) throw WavError(WavError::Kind::Malformed, name + ": extensible fmt chunk too small");
                // first two bytes of the sub-format GUID carry the actual codec
                f.format = read_u16(p + 24);
            }
            fmt = f;
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            data = bytes.data() + body;
            data_size = size;
        }
        pos = body + size + (size & 1u);
    }

    if (!fmt) throw WavError(WavError::Kind::Malformed, name + ": missing fmt chunk");
    if (!data) throw WavError(WavError::Kind::Truncated, name + ": missing data chunk");
    if (fmt->channels == 0 || fmt->sample_rate == 0)
        throw WavError(WavError::Kind::Malformed, name + ": zero channels or sample rate");

    const bool pcm16 = fmt->format == kFormatPcm && fmt->bits == 16;
    const bool float32 = fmt->format == kFormatFloat && fmt->bits == 32;
    if (!pcm16 && !float32)
        throw WavError(WavError::Kind::UnsupportedCodec,
                       name + ": unsupported codec (format " + std::to_string(fmt->format) + ", " +
                           std::to_string(fmt->bits) + " bits)");

    const std::size_t bytes_per_sample = fmt->bits / 8;
    const std::size_t frame_bytes = bytes_per_sample * fmt->channels;
    if (data_size % frame_bytes != 0)
        throw WavError(WavError::Kind::Truncated, name + ": data chunk ends mid-frame");
    const std::size_t frames = data_size / frame_bytes;

    Waveform w;
    w.sample_rate = static_cast<int>(fmt->sample_rate);
    w.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (std::size_t c = 0; c < fmt->channels; ++c) {
            const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
            if (pcm16) {
                acc += static_cast<std::int16_t>(read_u16(p)) / 32768.0;
            } else {
                const std::uint32_t bits = read_u32(p);
                float f;
                std::memcpy(&f, &bits, sizeof f);
                acc += f;
            }
        }
        w.samples[i] = acc / fmt->channels;
    }
    return w;
}

void write_wav_pcm16(const std::filesystem::path& path, const Waveform& w)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    const auto data_size = static_cast<std::uint32_t>(w.samples.size() * 2);
    out.write("RIFF", 4);
    put_u32(out, 36 + data_size);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    put_u32(out, 16);
    put_u16(out, kFormatPcm);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
    put_u16(out, 2);
    put_u16(out, 16);
    out.write("data", 4);
    put_u32(out, data_size);
    for (double s : w.samples) {
        const double c = std::clamp(s, -1.0, 1.0);
        put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(c * 32767.0))));
    }
}

}  // namespace ser
