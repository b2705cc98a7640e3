#include "shtnet/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "shtnet/error.hpp"
#include "shtnet/tensor_io.hpp"

namespace shtnet {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

template <typename T>
T load(const std::string& b, std::size_t pos) {
  if (pos + sizeof(T) > b.size()) throw Error(Errc::format, "WAV file truncated");
  T v;
  std::memcpy(&v, b.data() + pos, sizeof(T));
  return v;
}

template <typename T>
void store(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

}  // namespace

WavData decode_wav(const std::string& b) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 || b.compare(8, 4, "WAVE") != 0) {
    throw Error(Errc::format, "not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  std::size_t data_pos = 0;
  std::size_t data_len = 0;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const auto len = load<std::uint32_t>(b, pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (len < 16) throw Error(Errc::format, "WAV fmt chunk too short");
      format = load<std::uint16_t>(b, body);
      channels = load<std::uint16_t>(b, body + 2);
      rate = load<std::uint32_t>(b, body + 4);
      bits = load<std::uint16_t>(b, body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) throw Error(Errc::format, "WAV extensible fmt chunk too short");
        format = load<std::uint16_t>(b, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = std::min<std::size_t>(len, b.size() - body);
      have_data = true;
    }
    pos = body + len + (len & 1U);
  }
  if (!have_fmt || !have_data) throw Error(Errc::format, "WAV file lacks fmt or data chunk");
  if (channels == 0) throw Error(Errc::format, "WAV file has zero channels");

  WavData wav;
  wav.sample_rate = rate;
  std::size_t width = 0;
  if (format == kFormatPcm && bits == 16) {
    wav.format = SampleFormat::pcm16;
    width = 2;
  } else if (format == kFormatFloat && bits == 32) {
    wav.format = SampleFormat::float32;
    width = 4;
  } else {
    throw Error(Errc::format, "unsupported WAV encoding (format " + std::to_string(format) + ", " +
                                  std::to_string(bits) + " bits); expected PCM16 or float32");
  }
  const std::size_t frames = data_len / (width * channels);
  wav.signal = MultichannelSignal(channels, frames);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t at = data_pos + (t * channels + c) * width;
      wav.signal(c, t) = wav.format == SampleFormat::pcm16
                             ? static_cast<double>(load<std::int16_t>(b, at)) / 32768.0
                             : static_cast<double>(load<float>(b, at));
    }
  }
  return wav;
}

std::string encode_wav(const WavData& wav) {
  const auto channels = static_cast<std::uint16_t>(wav.signal.channels());
  const std::size_t frames = wav.signal.samples();
  const std::uint16_t width = wav.format == SampleFormat::pcm16 ? 2 : 4;
  const auto data_len = static_cast<std::uint32_t>(frames * channels * width);

  std::string out;
  out.reserve(44 + data_len);
  out += "RIFF";
  store<std::uint32_t>(out, 36 + data_len);
  out += "WAVEfmt ";
  store<std::uint32_t>(out, 16);
  store<std::uint16_t>(out, wav.format == SampleFormat::pcm16 ? kFormatPcm : kFormatFloat);
  store<std::uint16_t>(out, channels);
  store<std::uint32_t>(out, wav.sample_rate);
  store<std::uint32_t>(out, wav.sample_rate * channels * width);
  store<std::uint16_t>(out, static_cast<std::uint16_t>(channels * width));
  store<std::uint16_t>(out, static_cast<std::uint16_t>(8 * width));
  out += "data";
  store<std::uint32_t>(out, data_len);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = wav.signal(c, t);
      if (wav.format == SampleFormat::pcm16) {
        const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
        store<std::int16_t>(out, static_cast<std::int16_t>(s));
      } else {
        store<float>(out, static_cast<float>(v));
      }
    }
  }
  return out;
}

WavData read_wav(const std::filesystem::path& path) { return decode_wav(read_file(path)); }

void write_wav(const std::filesystem::path& path, const WavData& wav) { write_file(path, encode_wav(wav)); }

}  // namespace shtnet
