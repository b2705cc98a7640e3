#include "shtnet/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include <gsl/gsl_integration.h>

#include "shtnet/error.hpp"

namespace shtnet {

namespace {

constexpr double kPi = std::numbers::pi;

void require_order(int n, int m) {
  if (n < 0 || m < -n || m > n) {
    throw Error(Errc::domain, "invalid spherical harmonic index (n=" + std::to_string(n) +
                                  ", m=" + std::to_string(m) + ")");
  }
}

// sqrt((2n+1)/(4 pi) * (n-m)!/(n+m)!) with the factorial ratio in log space.
double sh_norm(int n, int m) {
  const double log_ratio = std::lgamma(n - m + 1.0) - std::lgamma(n + m + 1.0);
  return std::sqrt((2.0 * n + 1.0) / (4.0 * kPi) * std::exp(log_ratio));
}

std::vector<double> real_packing(const std::vector<cplx>& weights, int order, std::size_t mics) {
  std::vector<double> mix(weights.size());
  for (int n = 0; n <= order; ++n) {
    for (int m = 0; m <= n; ++m) {
      const std::size_t pos = static_cast<std::size_t>(sh_index(n, m));
      for (std::size_t i = 0; i < mics; ++i) {
        const cplx w = weights[pos * mics + i];
        mix[pos * mics + i] = w.real();
        if (m > 0) {
          const std::size_t neg = static_cast<std::size_t>(sh_index(n, -m));
          mix[neg * mics + i] = w.imag();
        }
      }
    }
  }
  return mix;
}

}  // namespace

double assoc_legendre(int n, int m, double x) {
  if (m < 0 || m > n) {
    throw Error(Errc::domain, "assoc_legendre requires 0 <= m <= n (n=" + std::to_string(n) +
                                  ", m=" + std::to_string(m) + ")");
  }
  if (!(std::abs(x) <= 1.0 + 1e-12)) throw Error(Errc::domain, "assoc_legendre requires |x| <= 1");
  x = std::clamp(x, -1.0, 1.0);

  // Diagonal seed P_m^m = (2m-1)!! (1 - x^2)^{m/2}, no (-1)^m.
  double pmm = 1.0;
  if (m > 0) {
    const double s = std::sqrt((1.0 - x) * (1.0 + x));
    for (int i = 1; i <= m; ++i) pmm *= (2.0 * i - 1.0) * s;
  }
  if (n == m) return pmm;

  double pm1 = x * (2.0 * m + 1.0) * pmm;
  if (n == m + 1) return pm1;

  double pm2 = pmm;
  double pl = 0.0;
  for (int l = m + 2; l <= n; ++l) {
    pl = ((2.0 * l - 1.0) * x * pm1 - (l + m - 1.0) * pm2) / (l - m);
    pm2 = pm1;
    pm1 = pl;
  }
  return pl;
}

cplx sph_harmonic_cos(int n, int m, double cos_theta, double phi) {
  require_order(n, m);
  if (m < 0) {
    const cplx y = std::conj(sph_harmonic_cos(n, -m, cos_theta, phi));
    return (m % 2 == 0) ? y : -y;
  }
  const double a = sh_norm(n, m) * assoc_legendre(n, m, cos_theta);
  if (m == 0) return {a, 0.0};
  return {a * std::cos(m * phi), a * std::sin(m * phi)};
}

cplx sph_harmonic(int n, int m, double theta, double phi) {
  return sph_harmonic_cos(n, m, polar_cosine(theta), phi);
}

int sh_index(int n, int m) {
  require_order(n, m);
  return n * n + n + m;
}

ShOrder sh_order(int channel) {
  if (channel < 0) throw Error(Errc::domain, "negative channel index");
  const int n = static_cast<int>(std::sqrt(static_cast<double>(channel)));
  int nn = n;
  while (nn * nn > channel) --nn;
  while ((nn + 1) * (nn + 1) <= channel) ++nn;
  return {nn, channel - nn * nn - nn};
}

ShtPlan::ShtPlan(ArrayGeometry geometry, int order, std::vector<cplx> weights)
    : geometry_(std::move(geometry)), order_(order), weights_(std::move(weights)) {
  if (order_ < 0) throw Error(Errc::domain, "order must be non-negative");
  if (weights_.size() != channels() * mics()) throw Error(Errc::shape, "plan weight matrix has wrong size");
  real_mixing_ = real_packing(weights_, order_, mics());
}

std::vector<cplx> ShtPlan::apply(std::span<const cplx> mic_values) const {
  if (mic_values.size() != mics()) throw Error(Errc::shape, "snapshot length does not match plan");
  std::vector<cplx> out(channels());
  for (std::size_t c = 0; c < channels(); ++c) {
    cplx acc = 0.0;
    for (std::size_t i = 0; i < mics(); ++i) acc += weights_[c * mics() + i] * mic_values[i];
    out[c] = acc;
  }
  return out;
}

ShtPlan build_plan(const ArrayGeometry& g, int order, std::span<const double> node_weights) {
  if (order < 0) throw Error(Errc::domain, "order must be non-negative");
  if (node_weights.size() != g.size()) throw Error(Errc::shape, "one quadrature weight per microphone required");
  const std::size_t C = static_cast<std::size_t>(sh_channel_count(order));
  const std::size_t I = g.size();
  std::vector<cplx> w(C * I);
  for (int n = 0; n <= order; ++n) {
    for (int m = -n; m <= n; ++m) {
      const std::size_t c = static_cast<std::size_t>(sh_index(n, m));
      for (std::size_t i = 0; i < I; ++i) {
        const auto& mic = g.mics()[i];
        w[c * I + i] = node_weights[i] * std::conj(sph_harmonic(n, m, mic.theta, mic.phi));
      }
    }
  }
  return ShtPlan(g, order, std::move(w));
}

ShtPlan build_plan(const ArrayGeometry& g, int order) {
  const std::vector<double> uniform(g.size(), 4.0 * kPi / static_cast<double>(g.size()));
  return build_plan(g, order, uniform);
}

std::vector<double> pack_real(std::span<const cplx> coefficients, int order) {
  const std::size_t C = static_cast<std::size_t>(sh_channel_count(order));
  if (coefficients.size() != C) throw Error(Errc::shape, "coefficient count does not match order");
  std::vector<double> out(C);
  for (int n = 0; n <= order; ++n) {
    for (int m = 0; m <= n; ++m) {
      const cplx p = coefficients[static_cast<std::size_t>(sh_index(n, m))];
      out[static_cast<std::size_t>(sh_index(n, m))] = p.real();
      if (m > 0) out[static_cast<std::size_t>(sh_index(n, -m))] = p.imag();
    }
  }
  return out;
}

SphereGrid sphere_grid(QuadratureGrid grid) {
  if (grid.polar < 1 || grid.azimuth < 1) throw Error(Errc::insufficient_resolution, "empty quadrature grid");
  std::unique_ptr<gsl_integration_glfixed_table, decltype(&gsl_integration_glfixed_table_free)> table(
      gsl_integration_glfixed_table_alloc(grid.polar), &gsl_integration_glfixed_table_free);
  if (!table) throw Error(Errc::insufficient_resolution, "cannot build Gauss-Legendre table");

  SphereGrid out;
  const std::size_t total = grid.polar * grid.azimuth;
  out.theta.reserve(total);
  out.cos_theta.reserve(total);
  out.phi.reserve(total);
  out.weight.reserve(total);
  const double dphi = 2.0 * kPi / static_cast<double>(grid.azimuth);
  for (std::size_t j = 0; j < grid.polar; ++j) {
    double x = 0.0;
    double wx = 0.0;
    gsl_integration_glfixed_point(-1.0, 1.0, j, &x, &wx, table.get());
    for (std::size_t k = 0; k < grid.azimuth; ++k) {
      out.theta.push_back(std::acos(x));
      out.cos_theta.push_back(x);
      out.phi.push_back(dphi * static_cast<double>(k));
      out.weight.push_back(wx * dphi);
    }
  }
  return out;
}

ArrayGeometry grid_geometry(const SphereGrid& grid) {
  std::vector<Vec3> positions;
  positions.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    positions.push_back(spherical_to_cartesian({1.0, grid.theta[i], grid.phi[i]}));
  }
  return ArrayGeometry::from_cartesian("sphere_grid", std::move(positions), false);
}

std::vector<cplx> quadrature_sht(const SphereField& field, int order, QuadratureGrid grid) {
  if (order < 0) throw Error(Errc::domain, "order must be non-negative");
  if (grid.polar < static_cast<std::size_t>(order) + 1 || grid.azimuth < 2 * static_cast<std::size_t>(order) + 1) {
    throw Error(Errc::insufficient_resolution,
                "order " + std::to_string(order) + " needs at least " + std::to_string(order + 1) +
                    " polar and " + std::to_string(2 * order + 1) + " azimuth nodes");
  }
  const SphereGrid g = sphere_grid(grid);
  const std::size_t C = static_cast<std::size_t>(sh_channel_count(order));
  std::vector<cplx> coeffs(C, 0.0);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const cplx value = field(g.theta[q], g.phi[q]) * g.weight[q];
    for (int n = 0; n <= order; ++n) {
      for (int m = -n; m <= n; ++m) {
        coeffs[static_cast<std::size_t>(sh_index(n, m))] +=
            value * std::conj(sph_harmonic_cos(n, m, g.cos_theta[q], g.phi[q]));
      }
    }
  }
  return coeffs;
}

}  // namespace shtnet
