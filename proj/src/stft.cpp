#include "shtnet/stft.hpp"

#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "shtnet/error.hpp"

namespace shtnet {

namespace {

// FFTW's planner is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline double modulus(double re, double im) noexcept { return std::sqrt(re * re + im * im); }

}  // namespace

void StftConfig::validate() const {
  if (!(sample_rate > 0.0)) throw Error(Errc::config, "sample rate must be positive");
  if (fft_size == 0 || frame_len == 0 || hop == 0) throw Error(Errc::config, "STFT sizes must be positive");
  if (frame_len > fft_size) throw Error(Errc::config, "frame length exceeds FFT size");
  if (hop > frame_len) throw Error(Errc::config, "hop exceeds frame length");
}

std::size_t StftConfig::frames(std::size_t samples) const noexcept {
  if (samples < frame_len) return 0;
  return 1 + (samples - frame_len) / hop;
}

std::vector<double> analysis_window(const StftConfig& cfg) {
  std::vector<double> w(cfg.frame_len, 1.0);
  if (cfg.window == Window::periodic_hann) {
    const double n = static_cast<double>(cfg.frame_len);
    for (std::size_t i = 0; i < cfg.frame_len; ++i) {
      w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / n);
    }
  }
  return w;
}

struct StftEngine::Impl {
  StftConfig cfg;
  std::vector<double> window;
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  explicit Impl(const StftConfig& c) : cfg(c), window(analysis_window(c)) {
    const int n = static_cast<int>(cfg.fft_size);
    in = fftw_alloc_real(cfg.fft_size);
    out = fftw_alloc_complex(cfg.bins());
    std::lock_guard lock(planner_mutex());
    plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
  }

  ~Impl() {
    {
      std::lock_guard lock(planner_mutex());
      if (plan) fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
  }

  std::size_t check(std::size_t samples) const {
    if (samples < cfg.frame_len) {
      throw Error(Errc::too_short, "signal of " + std::to_string(samples) + " samples is shorter than one frame (" +
                                       std::to_string(cfg.frame_len) + ")");
    }
    return cfg.frames(samples);
  }

  void run_frame(std::span<const double> signal, std::size_t t) {
    const double* src = signal.data() + t * cfg.hop;
    for (std::size_t i = 0; i < cfg.frame_len; ++i) in[i] = src[i] * window[i];
    for (std::size_t i = cfg.frame_len; i < cfg.fft_size; ++i) in[i] = 0.0;
    fftw_execute(plan);
  }
};

StftEngine::StftEngine(const StftConfig& cfg) {
  cfg.validate();
  impl_ = std::make_unique<Impl>(cfg);
}

StftEngine::~StftEngine() = default;
StftEngine::StftEngine(StftEngine&&) noexcept = default;
StftEngine& StftEngine::operator=(StftEngine&&) noexcept = default;

const StftConfig& StftEngine::config() const noexcept { return impl_->cfg; }

Spectrogram StftEngine::transform(std::span<const double> signal) {
  const std::size_t T = impl_->check(signal.size());
  const std::size_t F = impl_->cfg.bins();
  Spectrogram s{T, F, std::vector<std::complex<double>>(T * F)};
  for (std::size_t t = 0; t < T; ++t) {
    impl_->run_frame(signal, t);
    for (std::size_t f = 0; f < F; ++f) s.data[t * F + f] = {impl_->out[f][0], impl_->out[f][1]};
  }
  return s;
}

void StftEngine::magnitude(std::span<const double> signal, std::span<double> out) {
  const std::size_t T = impl_->check(signal.size());
  const std::size_t F = impl_->cfg.bins();
  if (out.size() != T * F) throw Error(Errc::shape, "magnitude output buffer has wrong size");
  for (std::size_t t = 0; t < T; ++t) {
    impl_->run_frame(signal, t);
    for (std::size_t f = 0; f < F; ++f) out[t * F + f] = modulus(impl_->out[f][0], impl_->out[f][1]);
  }
}

Spectrogram stft(std::span<const double> signal, const StftConfig& cfg) {
  StftEngine engine(cfg);
  return engine.transform(signal);
}

MagnitudeTensor::MagnitudeTensor(std::size_t channels, std::size_t frames, std::size_t bins)
    : values_(std::vector<std::size_t>{channels, frames, bins}) {}

MagnitudeTensor::MagnitudeTensor(Tensor values) : values_(std::move(values)) {
  if (values_.rank() != 3) throw Error(Errc::shape, "magnitude tensor must be rank 3");
  for (double v : values_.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(Errc::numeric_domain, "magnitude tensor entries must be finite and non-negative");
    }
  }
}

MagnitudeTensor magnitude_tensor(std::span<const Spectrogram> sh_spectra) {
  if (sh_spectra.empty()) return MagnitudeTensor(0, 0, 0);
  const std::size_t T = sh_spectra[0].frames;
  const std::size_t F = sh_spectra[0].bins;
  Tensor out(std::vector<std::size_t>{sh_spectra.size(), T, F});
  for (std::size_t c = 0; c < sh_spectra.size(); ++c) {
    const auto& s = sh_spectra[c];
    if (s.frames != T || s.bins != F || s.data.size() != T * F) {
      throw Error(Errc::shape, "spectrogram shapes differ across channels");
    }
    for (std::size_t k = 0; k < T * F; ++k) out[c * T * F + k] = modulus(s.data[k].real(), s.data[k].imag());
  }
  return MagnitudeTensor(std::move(out));
}

}  // namespace shtnet
