#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "shtnet/error.hpp"
#include "shtnet/harmonics.hpp"
#include "shtnet/simulate.hpp"
#include "shtnet/tensor_io.hpp"
#include "shtnet/wav.hpp"

using namespace shtnet;
using std::numbers::pi;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// Smooth, effectively band-limited pulse evaluated at continuous time t.
double pulse(double t) {
  const double t0 = 600.0, sigma = 40.0;
  return std::exp(-std::pow((t - t0) / sigma, 2)) * std::cos(2 * pi * 0.03 * t);
}

// Dense virtual array on a Gauss-Legendre grid at radius r.
struct DenseGrid {
  QuadratureGrid q;
  SphereGrid grid;
  ArrayGeometry geometry;
  ShtPlan plan;
};

DenseGrid dense_grid(double r, int order) {
  const QuadratureGrid q{20, 40};
  SphereGrid grid = sphere_grid(q);
  std::vector<Vec3> pos;
  for (std::size_t i = 0; i < grid.size(); ++i) pos.push_back(spherical_to_cartesian({r, grid.theta[i], grid.phi[i]}));
  ArrayGeometry g = ArrayGeometry::from_cartesian("dense", pos, false);
  ShtPlan plan = build_plan(g, order, grid.weight);
  return {q, std::move(grid), std::move(g), std::move(plan)};
}

}  // namespace

TEST_CASE("source from +z onto a planar array has no delays") {
  const auto g = uniform_circular(6, 0.05);
  const auto tau = arrival_delays(0.0, 1.0, g, 343);
  for (double t : tau) CHECK(t == 0.0);
  PlaneWaveSource src{0.0, 1.0, noise(500, 1), 1.0};
  const auto out = render_plane_wave(src, g, 16000, 343);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t t = 0; t < 500; ++t) {
      CHECK(out(i, t) == out(0, t));
      CHECK(std::abs(out(i, t) - src.signal[t]) < 1e-12);
    }
  }
}

TEST_CASE("axial pair delay equals spacing over c") {
  const double d = 4.0 * 343.0 / 16000.0;
  const auto g = ArrayGeometry::from_cartesian("pair", {{d / 2, 0, 0}, {-d / 2, 0, 0}});
  const auto tau = arrival_delays(pi / 2, 0.0, g, 343);
  CHECK(tau[1] - tau[0] == doctest::Approx(d / 343).epsilon(1e-12));

  PlaneWaveSource src{pi / 2, 0.0, noise(4000, 2), 1.0};
  const auto out = render_plane_wave(src, g, 16000, 343);
  int best = 0;
  double best_val = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double s = 0.0;
    for (int t = 20; t < 3980; ++t) s += out(0, static_cast<std::size_t>(t)) * out(1, static_cast<std::size_t>(t + lag));
    if (s > best_val) {
      best_val = s;
      best = lag;
    }
  }
  CHECK(best == 4);
}

TEST_CASE("oblique source: delays and waveforms match per-mic geometry") {
  const auto g = uniform_circular(8, 0.1);
  const double theta = 1.0, phi = 2.2, c = 343, fs = 16000;
  const auto tau = arrival_delays(theta, phi, g, c);
  std::vector<double> sig(1200);
  for (std::size_t t = 0; t < sig.size(); ++t) sig[t] = pulse(static_cast<double>(t));
  const auto out = render_plane_wave({theta, phi, sig, 0.5}, g, fs, c);
  for (std::size_t i = 0; i < 8; ++i) {
    const auto& p = g.positions()[i];
    const double expect =
        -(std::sin(theta) * std::cos(phi) * p.x + std::sin(theta) * std::sin(phi) * p.y + std::cos(theta) * p.z) / c;
    CHECK(tau[i] == doctest::Approx(expect).epsilon(1e-12));
    double worst = 0.0;
    for (std::size_t t = 0; t < sig.size(); ++t) {
      worst = std::max(worst, std::abs(out(i, t) - 0.5 * pulse(static_cast<double>(t) - expect * fs)));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("fractional delay is unit gain") {
  const auto x = noise(1001, 3);
  double ein = 0.0;
  for (double v : x) ein += v * v;
  for (double d : {0.0, 0.37, -2.5, 7.91}) {
    const auto y = fractional_delay(x, d, 12);
    double eout = 0.0;
    for (double v : y) eout += v * v;
    CHECK(eout == doctest::Approx(ein).epsilon(1e-9));
  }
  // integer delay is an exact shift
  const auto y = fractional_delay(x, 3.0, 10);
  for (std::size_t t = 0; t < x.size(); ++t) CHECK(std::abs(y[10 + 3 + t] - x[t]) < 1e-12);
}

TEST_CASE("white noise at a target SNR") {
  MultichannelSignal s(2, 16000);
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t t = 0; t < 16000; ++t) s(c, t) = std::sqrt(2.0) * std::sin(2 * pi * 440 * t / 16000.0 + c);
  }
  CHECK(signal_power(s) == doctest::Approx(1.0).epsilon(1e-3));
  for (double snr : {0.0, 20.0, -5.0}) {
    const auto y = add_white_noise(s, snr, 9);
    MultichannelSignal n = y;
    for (std::size_t k = 0; k < n.data().size(); ++k) n.data()[k] -= s.data()[k];
    const double measured = 10 * std::log10(signal_power(s) / signal_power(n));
    CHECK(std::abs(measured - snr) < 0.1);
  }
  CHECK(add_white_noise(s, 10, 4) == add_white_noise(s, 10, 4));
  CHECK_FALSE(add_white_noise(s, 10, 4) == add_white_noise(s, 10, 5));
  try {
    add_white_noise(MultichannelSignal(2, 10), 10, 1);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::cannot_set_snr);
  }
}

TEST_CASE("dense-grid SHT of a narrowband plane wave matches the analytic expansion") {
  const int N = 4;
  const double r = 0.05, f = 1000, c = 343;
  const auto dg = dense_grid(r, N);
  const double theta = 0.9, phi = 2.0;
  const auto discrete = dg.plan.apply(narrowband_response(theta, phi, dg.geometry, f, c));

  const double k = 2 * pi * f / c;
  const Vec3 u = unit_vector(theta, phi);
  auto field = [&](double th, double ph) {
    const Vec3 x = spherical_to_cartesian({r, th, ph});
    return std::polar(1.0, k * (u.x * x.x + u.y * x.y + u.z * x.z));
  };
  const auto quad = quadrature_sht(field, N, dg.q);

  // plane-wave expansion: 4 pi i^n j_n(kr) conj(Y_n^m(u))
  for (int n = 0; n <= N; ++n) {
    const cplx in = std::pow(cplx(0, 1), n);
    for (int m = -n; m <= n; ++m) {
      const auto ch = static_cast<std::size_t>(sh_index(n, m));
      const cplx expect = 4 * pi * in * std::sph_bessel(static_cast<unsigned>(n), k * r) *
                          std::conj(sph_harmonic(n, m, theta, phi));
      if (std::abs(expect) > 1e-9) {
        CHECK(std::abs(discrete[ch] - quad[ch]) / std::abs(quad[ch]) < 0.01);
        CHECK(std::abs(discrete[ch] - expect) / std::abs(expect) < 0.01);
      } else {
        CHECK(std::abs(discrete[ch]) < 1e-9);
      }
    }
  }
}

TEST_CASE("azimuth rotation multiplies coefficients by exp(-i m dphi)") {
  const int N = 4;
  const auto dg = dense_grid(0.05, N);
  const double theta = 1.2, phi = 0.4;
  const auto base = dg.plan.apply(narrowband_response(theta, phi, dg.geometry, 1000, 343));
  for (double dphi : {0.3, 1.7, -2.9}) {
    const auto rot = dg.plan.apply(narrowband_response(theta, phi + dphi, dg.geometry, 1000, 343));
    for (int n = 0; n <= N; ++n) {
      for (int m = -n; m <= n; ++m) {
        const auto ch = static_cast<std::size_t>(sh_index(n, m));
        CHECK(std::abs(rot[ch] - base[ch] * std::polar(1.0, -m * dphi)) < 1e-6);
      }
    }
  }
}

TEST_CASE("scene rendering") {
  testing::TempDir dir;
  write_file(dir / "g.json", geometry_to_json(uniform_circular(4, 0.05)));
  WavData mono{16000, SampleFormat::float32, MultichannelSignal(1, 800)};
  const auto x = noise(800, 6);
  for (std::size_t t = 0; t < 800; ++t) mono.signal(0, t) = 0.1 * x[t];
  write_wav(dir / "s.wav", mono);
  write_file(dir / "scene.json",
             R"({"geometry":"g.json","fs":16000,"snr_db":10,"seed":3,
                 "sources":[{"direction":[90,45],"wav":"s.wav","gain":0.5},
                            {"direction":[30,200],"wav":"s.wav"}]})");
  const Scene scene = load_scene(dir / "scene.json");
  CHECK(scene.sources.size() == 2);
  CHECK(scene.sources[1].gain == 1.0);
  const auto a = render_scene(scene);
  CHECK(a.channels() == 4);
  CHECK(a.samples() == 800);
  CHECK(a == render_scene(scene));

  write_file(dir / "bad.json", R"({"geometry":"missing.json","sources":[{"direction":[0,0],"wav":"s.wav"}]})");
  CHECK_THROWS_AS(render_scene(load_scene(dir / "bad.json")), Error);
  CHECK_THROWS_AS(parse_scene(R"({"geometry":"g.json","sources":[]})", dir.path()), Error);
  CHECK_THROWS_AS(parse_scene(R"({"geometry":"g.json","sources":[{"direction":[1],"wav":"s.wav"}]})", dir.path()),
                  Error);
}
