#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "shtnet/tensor.hpp"

namespace shtnet {

enum class Window { periodic_hann, rectangular };

struct StftConfig {
  double sample_rate = 16000.0;
  std::size_t fft_size = 512;
  std::size_t frame_len = 400;  // 25 ms
  std::size_t hop = 160;        // 10 ms
  Window window = Window::periodic_hann;

  void validate() const;
  std::size_t bins() const noexcept { return fft_size / 2 + 1; }
  /// 1 + floor((L - frame_len) / hop), or 0 when L < frame_len.
  std::size_t frames(std::size_t samples) const noexcept;
};

std::vector<double> analysis_window(const StftConfig& cfg);

/// One-sided complex spectrogram, T x F row-major.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<std::complex<double>> data;

  std::complex<double>& at(std::size_t t, std::size_t f) { return data[t * bins + f]; }
  std::complex<double> at(std::size_t t, std::size_t f) const { return data[t * bins + f]; }
};

/// Reusable STFT engine (one FFTW plan plus scratch buffers). Not safe for
/// concurrent use of the same instance; create one per thread.
class StftEngine {
 public:
  explicit StftEngine(const StftConfig& cfg);
  ~StftEngine();
  StftEngine(StftEngine&&) noexcept;
  StftEngine& operator=(StftEngine&&) noexcept;
  StftEngine(const StftEngine&) = delete;
  StftEngine& operator=(const StftEngine&) = delete;

  const StftConfig& config() const noexcept;

  /// Frames start at sample 0, no padding. Throws Errc::too_short if the
  /// signal is shorter than one frame.
  Spectrogram transform(std::span<const double> signal);
  /// Writes |STFT| into `out` (T x F) without materialising the complex
  /// spectrum.
  void magnitude(std::span<const double> signal, std::span<double> out);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Spectrogram stft(std::span<const double> signal, const StftConfig& cfg);

/// The C x T x F magnitude tensor A. All entries are non-negative.
class MagnitudeTensor {
 public:
  MagnitudeTensor() = default;
  MagnitudeTensor(std::size_t channels, std::size_t frames, std::size_t bins);
  /// Wraps a rank-3 tensor; throws Errc::shape / Errc::numeric_domain on
  /// wrong rank or negative entries.
  explicit MagnitudeTensor(Tensor values);

  std::size_t channels() const noexcept { return values_.rank() ? values_.dim(0) : 0; }
  std::size_t frames() const noexcept { return values_.rank() ? values_.dim(1) : 0; }
  std::size_t bins() const noexcept { return values_.rank() ? values_.dim(2) : 0; }

  double at(std::size_t c, std::size_t t, std::size_t f) const { return values_.at(c, t, f); }
  const Tensor& tensor() const noexcept { return values_; }
  Tensor release() && { return std::move(values_); }

 private:
  Tensor values_;
};

/// Elementwise modulus of per-channel spectra (all of equal shape).
MagnitudeTensor magnitude_tensor(std::span<const Spectrogram> sh_spectra);

}  // namespace shtnet
