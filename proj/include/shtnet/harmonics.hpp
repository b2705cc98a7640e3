#pragma once

// Spherical harmonics without the Condon-Shortley phase:
//
//   Y_n^m(theta, phi) = sqrt((2n+1)(n-m)! / (4 pi (n+m)!)) P_n^m(cos theta) e^{i m phi}
//   Y_n^{-m} = (-1)^m conj(Y_n^m)
//
// Libraries that include (-1)^m in P_n^m (Boost, SciPy) differ by that factor
// for odd m > 0.

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "shtnet/geometry.hpp"

namespace shtnet {

using cplx = std::complex<double>;

struct ShOrder {
  int n = 0;
  int m = 0;
  friend bool operator==(const ShOrder&, const ShOrder&) = default;
};

/// Unnormalised P_n^m(x), 0 <= m <= n, |x| <= 1 (+1e-12 slack).
double assoc_legendre(int n, int m, double x);

/// Y_n^m evaluated from cos(theta) directly.
cplx sph_harmonic_cos(int n, int m, double cos_theta, double phi);
cplx sph_harmonic(int n, int m, double theta, double phi);

/// Flat channel index c = n^2 + n + m.
int sh_index(int n, int m);
ShOrder sh_order(int channel);
inline int sh_channel_count(int order) { return (order + 1) * (order + 1); }

/// C x I encoding matrix: weights(c, i) = w_i conj(Y_n^m(theta_i, phi_i)),
/// with w_i = 4 pi / I for array plans.
class ShtPlan {
 public:
  ShtPlan(ArrayGeometry geometry, int order, std::vector<cplx> weights);

  const ArrayGeometry& geometry() const noexcept { return geometry_; }
  int order() const noexcept { return order_; }
  std::size_t channels() const noexcept { return static_cast<std::size_t>(sh_channel_count(order_)); }
  std::size_t mics() const noexcept { return geometry_.size(); }

  cplx weight(std::size_t c, std::size_t i) const { return weights_[c * mics() + i]; }
  std::span<const cplx> weights() const noexcept { return weights_; }

  /// Complex coefficients for one snapshot of per-mic values.
  std::vector<cplx> apply(std::span<const cplx> mic_values) const;

  /// Real C x I mixing matrix for real input: channel (n, m>=0) carries
  /// Re p_nm, channel (n, -m) carries Im p_nm.
  const std::vector<double>& real_mixing() const noexcept { return real_mixing_; }

 private:
  ArrayGeometry geometry_;
  int order_;
  std::vector<cplx> weights_;
  std::vector<double> real_mixing_;
};

ShtPlan build_plan(const ArrayGeometry& g, int order);
/// Same as build_plan but with explicit per-mic quadrature weights in place
/// of the uniform 4 pi / I (for virtual sampling grids).
ShtPlan build_plan(const ArrayGeometry& g, int order, std::span<const double> node_weights);

/// Packs complex coefficients p_nm into the real channel layout used by
/// ShtPlan::real_mixing.
std::vector<double> pack_real(std::span<const cplx> coefficients, int order);

struct QuadratureGrid {
  std::size_t polar = 0;    ///< Gauss-Legendre nodes in cos(theta)
  std::size_t azimuth = 0;  ///< uniform azimuth samples
};

/// Product grid of Gauss-Legendre polar nodes and uniform azimuth samples.
/// `weight` sums to 4 pi.
struct SphereGrid {
  std::vector<double> theta;
  std::vector<double> cos_theta;
  std::vector<double> phi;
  std::vector<double> weight;

  std::size_t size() const noexcept { return theta.size(); }
};

SphereGrid sphere_grid(QuadratureGrid grid);
/// Unit-radius virtual array on the grid nodes, not re-referenced.
ArrayGeometry grid_geometry(const SphereGrid& grid);

using SphereField = std::function<cplx(double theta, double phi)>;

/// Integral of field * conj(Y_n^m) over the sphere for all channels up to
/// `order`. Throws Errc::insufficient_resolution unless
/// grid.polar >= order + 1 and grid.azimuth >= 2 order + 1.
std::vector<cplx> quadrature_sht(const SphereField& field, int order, QuadratureGrid grid);

}  // namespace shtnet
