#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace shtnet {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// (r, theta, phi): radius in metres, polar angle from +z in [0, pi],
/// azimuth from +x in [0, 2 pi).
struct SphericalCoord {
  double r = 0.0;
  double theta = 0.0;
  double phi = 0.0;

  bool operator==(const SphericalCoord&) const = default;
};

/// cos(theta) that is exactly 0 at the double nearest pi/2, so equatorial
/// positions keep z == 0 and odd-parity Legendre terms vanish exactly.
double polar_cosine(double theta) noexcept;
double polar_sine(double theta) noexcept;

/// Wraps phi into [0, 2 pi) and clamps theta into [0, pi] when it is
/// outside by at most 1e-12; larger excursions throw Errc::domain.
SphericalCoord normalize(SphericalCoord c);

/// r = 0 maps to (0, 0, 0).
SphericalCoord cartesian_to_spherical(double x, double y, double z) noexcept;
inline SphericalCoord cartesian_to_spherical(const Vec3& p) noexcept {
  return cartesian_to_spherical(p.x, p.y, p.z);
}
Vec3 spherical_to_cartesian(const SphericalCoord& c) noexcept;

/// Immutable microphone array description. Channel order is the order of
/// `mics()` and must match the signal channel order everywhere downstream.
class ArrayGeometry {
 public:
  /// Builds from Cartesian positions. With `centroid_reference` the mean
  /// position is subtracted first.
  static ArrayGeometry from_cartesian(std::string name, std::vector<Vec3> positions,
                                      bool centroid_reference = true);
  /// Builds from spherical coordinates as given (no re-referencing). The
  /// geometry is flagged centroid-referenced if its centroid is within 1e-9 m
  /// of the origin.
  static ArrayGeometry from_spherical(std::string name, std::vector<SphericalCoord> mics);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return mics_.size(); }
  std::span<const SphericalCoord> mics() const noexcept { return mics_; }
  std::span<const Vec3> positions() const noexcept { return positions_; }
  bool centroid_referenced() const noexcept { return centroid_referenced_; }

  Vec3 centroid() const noexcept;
  double max_radius() const noexcept;

 private:
  ArrayGeometry() = default;

  std::string name_;
  std::vector<SphericalCoord> mics_;
  std::vector<Vec3> positions_;
  bool centroid_referenced_ = false;
};

struct UniformCircular {
  std::size_t mics = 8;
  double radius = 0.05;
};
struct Square {
  double side = 0.1;
};
struct Binaural {
  double spacing = 0.2;
};
struct Custom {
  std::vector<Vec3> positions;
  std::string name = "custom";
};
using GeometryKind = std::variant<UniformCircular, Square, Binaural, Custom>;

ArrayGeometry builtin_geometry(const GeometryKind& kind);
ArrayGeometry uniform_circular(std::size_t mics, double radius);
ArrayGeometry square_array(double side);
ArrayGeometry binaural_pair(double spacing);

/// Selected microphones re-referenced to their own Cartesian centroid
/// (pure translation). Requires 2 <= indices.size() and distinct in-range
/// indices; otherwise throws Errc::invalid_subset.
ArrayGeometry subset_geometry(const ArrayGeometry& g, std::span<const std::size_t> indices);

/// Minimum source distance 8 r_max^2 f / c for the far-field assumption.
double far_field_min_distance(const ArrayGeometry& g, double f_max, double c);

/// Geometry JSON: {"name": str, "unit": "m", "mics": [[x, y, z], ...]}.
/// Positions are centroid-referenced on load.
ArrayGeometry parse_geometry_json(const std::string& text);
ArrayGeometry load_geometry(const std::filesystem::path& path);
std::string geometry_to_json(const ArrayGeometry& g);

}  // namespace shtnet
