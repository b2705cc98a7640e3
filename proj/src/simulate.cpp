#include "shtnet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>

#include <fftw3.h>
#include <json.hpp>

#include "shtnet/error.hpp"
#include "shtnet/tensor_io.hpp"
#include "shtnet/wav.hpp"

namespace shtnet {

namespace {

constexpr double kPi = std::numbers::pi;

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// Odd-length real FFT workspace; odd N has no Nyquist bin, so a linear-phase
// shift is exactly unitary.
class DelayBuffer {
 public:
  explicit DelayBuffer(std::size_t n) : n_(n), bins_(n / 2 + 1) {
    time_ = fftw_alloc_real(n_);
    spec_ = fftw_alloc_complex(bins_);
    work_ = fftw_alloc_complex(bins_);
    std::lock_guard lock(planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(static_cast<int>(n_), time_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(static_cast<int>(n_), work_, time_, FFTW_ESTIMATE);
  }
  ~DelayBuffer() {
    {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(time_);
    fftw_free(spec_);
    fftw_free(work_);
  }
  DelayBuffer(const DelayBuffer&) = delete;
  DelayBuffer& operator=(const DelayBuffer&) = delete;

  void load(std::span<const double> signal, std::size_t offset) {
    std::fill(time_, time_ + n_, 0.0);
    std::copy(signal.begin(), signal.end(), time_ + offset);
    fftw_execute(forward_);
  }

  // Circularly delays the loaded signal; result is left in time().
  void delay(double samples) {
    const double n = static_cast<double>(n_);
    for (std::size_t k = 0; k < bins_; ++k) {
      const double angle = -2.0 * kPi * static_cast<double>(k) * samples / n;
      const double c = std::cos(angle);
      const double s = std::sin(angle);
      work_[k][0] = (spec_[k][0] * c - spec_[k][1] * s) / n;
      work_[k][1] = (spec_[k][0] * s + spec_[k][1] * c) / n;
    }
    fftw_execute(inverse_);
  }

  const double* time() const noexcept { return time_; }
  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  std::size_t bins_;
  double* time_ = nullptr;
  fftw_complex* spec_ = nullptr;
  fftw_complex* work_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

std::size_t odd_length(std::size_t samples, std::size_t pad) {
  std::size_t n = samples + 2 * pad;
  if (n % 2 == 0) ++n;
  return n;
}

}  // namespace

Vec3 unit_vector(double theta, double phi) noexcept {
  return spherical_to_cartesian({1.0, theta, phi});
}

std::vector<double> arrival_delays(double theta, double phi, const ArrayGeometry& g, double c) {
  if (!(c > 0.0)) throw Error(Errc::domain, "sound speed must be positive");
  const Vec3 u = unit_vector(theta, phi);
  std::vector<double> tau;
  tau.reserve(g.size());
  for (const auto& p : g.positions()) tau.push_back(-(u.x * p.x + u.y * p.y + u.z * p.z) / c);
  return tau;
}

std::vector<double> fractional_delay(std::span<const double> signal, double delay_samples, std::size_t pad) {
  DelayBuffer buf(odd_length(signal.size(), pad));
  buf.load(signal, pad);
  buf.delay(delay_samples);
  return {buf.time(), buf.time() + buf.size()};
}

MultichannelSignal render_plane_wave(const PlaneWaveSource& src, const ArrayGeometry& g, double fs, double c) {
  if (!(fs > 0.0)) throw Error(Errc::domain, "sample rate must be positive");
  for (double v : src.signal) {
    if (!std::isfinite(v)) throw Error(Errc::domain, "source signal is not finite");
  }
  const std::vector<double> tau = arrival_delays(src.theta, src.phi, g, c);
  double max_delay = 0.0;
  for (double t : tau) max_delay = std::max(max_delay, std::abs(t * fs));
  const auto pad = static_cast<std::size_t>(std::ceil(max_delay)) + 16;

  const std::size_t L = src.signal.size();
  MultichannelSignal out(g.size(), L);
  if (L == 0) return out;
  DelayBuffer buf(odd_length(L, pad));
  buf.load(src.signal, pad);
  for (std::size_t i = 0; i < g.size(); ++i) {
    buf.delay(tau[i] * fs);
    auto dst = out.channel(i);
    for (std::size_t t = 0; t < L; ++t) dst[t] = src.level * buf.time()[pad + t];
  }
  return out;
}

std::vector<std::complex<double>> narrowband_response(double theta, double phi, const ArrayGeometry& g, double freq,
                                                      double c) {
  const std::vector<double> tau = arrival_delays(theta, phi, g, c);
  std::vector<std::complex<double>> out;
  out.reserve(tau.size());
  for (double t : tau) out.push_back(std::polar(1.0, -2.0 * kPi * freq * t));
  return out;
}

double signal_power(const MultichannelSignal& s) noexcept {
  if (s.data().empty()) return 0.0;
  double e = 0.0;
  for (double v : s.data()) e += v * v;
  return e / static_cast<double>(s.data().size());
}

MultichannelSignal add_white_noise(const MultichannelSignal& signal, double snr_db, std::uint64_t seed) {
  const double ps = signal_power(signal);
  if (!(ps > 0.0)) throw Error(Errc::cannot_set_snr, "signal has zero energy");
  if (!std::isfinite(snr_db)) throw Error(Errc::cannot_set_snr, "SNR must be finite");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MultichannelSignal noise(signal.channels(), signal.samples());
  for (double& v : noise.data()) v = gauss(rng);
  const double pn = signal_power(noise);
  const double scale = std::sqrt(ps / std::pow(10.0, snr_db / 10.0) / pn);
  MultichannelSignal out = signal;
  for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] += scale * noise.data()[k];
  return out;
}

Scene parse_scene(const std::string& text, const std::filesystem::path& base_dir) {
  auto resolve = [&base_dir](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  Scene s;
  try {
    const auto j = nlohmann::json::parse(text);
    s.geometry = resolve(j.at("geometry").get<std::string>());
    s.fs = j.value("fs", 16000.0);
    if (j.contains("snr_db") && !j["snr_db"].is_null()) s.snr_db = j["snr_db"].get<double>();
    s.seed = j.value("seed", std::uint64_t{0});
    s.speed_of_sound = j.value("speed_of_sound", 343.0);
    for (const auto& src : j.at("sources")) {
      SceneSource ss;
      const auto dir = src.at("direction");
      if (!dir.is_array() || dir.size() != 2) throw Error(Errc::config, "source direction must be [theta_deg, phi_deg]");
      ss.theta_deg = dir[0].get<double>();
      ss.phi_deg = dir[1].get<double>();
      ss.wav = resolve(src.at("wav").get<std::string>());
      ss.gain = src.value("gain", 1.0);
      s.sources.push_back(std::move(ss));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config, std::string("malformed scene: ") + e.what());
  }
  if (s.sources.empty()) throw Error(Errc::config, "scene has no sources");
  if (!(s.fs > 0.0) || !(s.speed_of_sound > 0.0)) throw Error(Errc::config, "fs and speed_of_sound must be positive");
  return s;
}

Scene load_scene(const std::filesystem::path& path) {
  return parse_scene(read_file(path), path.parent_path());
}

MultichannelSignal render_scene(const Scene& scene) {
  const ArrayGeometry g = load_geometry(scene.geometry);
  MultichannelSignal mix;
  for (const auto& src : scene.sources) {
    const WavData wav = read_wav(src.wav);
    if (wav.signal.channels() != 1) throw Error(Errc::config, "source WAV " + src.wav.string() + " must be mono");
    if (static_cast<double>(wav.sample_rate) != scene.fs) {
      throw Error(Errc::config, "source WAV " + src.wav.string() + " sample rate differs from scene fs");
    }
    PlaneWaveSource pw;
    pw.theta = src.theta_deg * kPi / 180.0;
    pw.phi = src.phi_deg * kPi / 180.0;
    const auto ch = wav.signal.channel(0);
    pw.signal.assign(ch.begin(), ch.end());
    pw.level = src.gain;
    const MultichannelSignal r = render_plane_wave(pw, g, scene.fs, scene.speed_of_sound);
    if (mix.channels() == 0) {
      mix = r;
    } else {
      const std::size_t L = std::max(mix.samples(), r.samples());
      MultichannelSignal grown(g.size(), L);
      for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t t = 0; t < mix.samples(); ++t) grown(i, t) += mix(i, t);
        for (std::size_t t = 0; t < r.samples(); ++t) grown(i, t) += r(i, t);
      }
      mix = std::move(grown);
    }
  }
  if (scene.snr_db) mix = add_white_noise(mix, *scene.snr_db, scene.seed);
  return mix;
}

}  // namespace shtnet
