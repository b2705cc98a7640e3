#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shtnet/geometry.hpp"
#include "shtnet/signal.hpp"

namespace shtnet {

/// Far-field source located in direction (theta, phi) as seen from the
/// array centre.
struct PlaneWaveSource {
  double theta = 0.0;
  double phi = 0.0;
  std::vector<double> signal;
  double level = 1.0;
};

Vec3 unit_vector(double theta, double phi) noexcept;

/// tau_i = -(u_s . x_i) / c in seconds; mics nearer the source hear it first.
std::vector<double> arrival_delays(double theta, double phi, const ArrayGeometry& g, double c);

/// Circular band-limited delay by `delay_samples` on an odd-length buffer of
/// signal.size() + 2 pad samples (signal placed at offset pad). Returns the
/// whole buffer; the operation is unitary.
std::vector<double> fractional_delay(std::span<const double> signal, double delay_samples, std::size_t pad);

/// I x L rendering, each channel delayed by tau_i (frequency-domain linear
/// phase on a zero-padded buffer, cropped back to L samples).
MultichannelSignal render_plane_wave(const PlaneWaveSource& src, const ArrayGeometry& g, double fs, double c);

/// Per-mic complex amplitudes exp(-i 2 pi f tau_i) of a unit narrowband
/// plane wave.
std::vector<std::complex<double>> narrowband_response(double theta, double phi, const ArrayGeometry& g,
                                                      double freq, double c);

/// Adds i.i.d. Gaussian noise to every channel, scaled so the total
/// signal-to-noise power ratio is exactly snr_db. Throws Errc::cannot_set_snr
/// for a zero-energy signal.
MultichannelSignal add_white_noise(const MultichannelSignal& signal, double snr_db, std::uint64_t seed);

double signal_power(const MultichannelSignal& s) noexcept;

struct SceneSource {
  double theta_deg = 0.0;
  double phi_deg = 0.0;
  std::filesystem::path wav;
  double gain = 1.0;
};

/// {"sources": [{"direction": [theta_deg, phi_deg], "wav": path, "gain": g}],
///  "geometry": path, "fs": Hz, "snr_db": dB (optional), "seed": int,
///  "speed_of_sound": m/s (optional, 343)}. Relative paths resolve against
/// the scene file's directory.
struct Scene {
  std::vector<SceneSource> sources;
  std::filesystem::path geometry;
  double fs = 16000.0;
  std::optional<double> snr_db;
  std::uint64_t seed = 0;
  double speed_of_sound = 343.0;
};

Scene parse_scene(const std::string& text, const std::filesystem::path& base_dir);
Scene load_scene(const std::filesystem::path& path);
/// Renders all sources (sum), then adds noise if snr_db is set. Source WAVs
/// must be mono at the scene rate.
MultichannelSignal render_scene(const Scene& scene);

}  // namespace shtnet
