#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "shtnet/signal.hpp"

namespace shtnet {

enum class SampleFormat { pcm16, float32 };

struct WavData {
  std::uint32_t sample_rate = 16000;
  SampleFormat format = SampleFormat::float32;
  MultichannelSignal signal;  ///< PCM16 scaled to [-1, 1)
};

/// RIFF/WAVE with PCM 16-bit or IEEE float32 samples (WAVE_FORMAT_EXTENSIBLE
/// accepted). Throws Errc::format on anything else.
WavData decode_wav(const std::string& bytes);
std::string encode_wav(const WavData& wav);

WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const WavData& wav);

}  // namespace shtnet
