#include "shtnet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <json.hpp>

#include "shtnet/error.hpp"
#include "shtnet/tensor_io.hpp"

namespace shtnet {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kAngleSlack = 1e-12;
constexpr double kCentroidTol = 1e-9;

double wrap_azimuth(double phi) noexcept {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi) w = 0.0;
  return w;
}

Vec3 mean_position(std::span<const Vec3> p) noexcept {
  Vec3 m;
  for (const auto& v : p) {
    m.x += v.x;
    m.y += v.y;
    m.z += v.z;
  }
  const double n = static_cast<double>(p.size());
  if (n > 0) {
    m.x /= n;
    m.y /= n;
    m.z /= n;
  }
  return m;
}

bool near_origin(const Vec3& v) noexcept {
  return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z) <= kCentroidTol;
}

void require_finite_position(const Vec3& p) {
  if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
    throw Error(Errc::invalid_geometry, "non-finite microphone position");
  }
}

}  // namespace

double polar_cosine(double theta) noexcept {
  if (theta == kPi / 2) return 0.0;
  return std::cos(theta);
}

double polar_sine(double theta) noexcept {
  if (theta == kPi / 2) return 1.0;
  if (theta == kPi) return 0.0;
  return std::sin(theta);
}

SphericalCoord normalize(SphericalCoord c) {
  if (!std::isfinite(c.r) || !std::isfinite(c.theta) || !std::isfinite(c.phi)) {
    throw Error(Errc::domain, "non-finite spherical coordinate");
  }
  if (c.r < 0.0) throw Error(Errc::domain, "negative radius");
  if (c.theta < -kAngleSlack || c.theta > kPi + kAngleSlack) {
    throw Error(Errc::domain, "polar angle " + std::to_string(c.theta) + " outside [0, pi]");
  }
  c.theta = std::clamp(c.theta, 0.0, kPi);
  c.phi = wrap_azimuth(c.phi);
  return c;
}

SphericalCoord cartesian_to_spherical(double x, double y, double z) noexcept {
  const double r = std::sqrt(x * x + y * y + z * z);
  if (r == 0.0) return {};
  const double theta = std::acos(std::clamp(z / r, -1.0, 1.0));
  return {r, theta, wrap_azimuth(std::atan2(y, x))};
}

Vec3 spherical_to_cartesian(const SphericalCoord& c) noexcept {
  const double s = polar_sine(c.theta);
  return {c.r * s * std::cos(c.phi), c.r * s * std::sin(c.phi), c.r * polar_cosine(c.theta)};
}

ArrayGeometry ArrayGeometry::from_cartesian(std::string name, std::vector<Vec3> positions,
                                            bool centroid_reference) {
  if (positions.empty()) throw Error(Errc::invalid_geometry, "geometry needs at least one microphone");
  for (const auto& p : positions) require_finite_position(p);
  if (centroid_reference) {
    const Vec3 m = mean_position(positions);
    for (auto& p : positions) {
      p.x -= m.x;
      p.y -= m.y;
      p.z -= m.z;
    }
  }
  ArrayGeometry g;
  g.name_ = std::move(name);
  g.mics_.reserve(positions.size());
  for (const auto& p : positions) g.mics_.push_back(cartesian_to_spherical(p));
  g.positions_ = std::move(positions);
  g.centroid_referenced_ = centroid_reference || near_origin(mean_position(g.positions_));
  return g;
}

ArrayGeometry ArrayGeometry::from_spherical(std::string name, std::vector<SphericalCoord> mics) {
  if (mics.empty()) throw Error(Errc::invalid_geometry, "geometry needs at least one microphone");
  ArrayGeometry g;
  g.name_ = std::move(name);
  g.mics_.reserve(mics.size());
  g.positions_.reserve(mics.size());
  for (const auto& c : mics) {
    g.mics_.push_back(normalize(c));
    g.positions_.push_back(spherical_to_cartesian(g.mics_.back()));
  }
  g.centroid_referenced_ = near_origin(mean_position(g.positions_));
  return g;
}

Vec3 ArrayGeometry::centroid() const noexcept { return mean_position(positions_); }

double ArrayGeometry::max_radius() const noexcept {
  double r = 0.0;
  for (const auto& m : mics_) r = std::max(r, m.r);
  return r;
}

ArrayGeometry uniform_circular(std::size_t mics, double radius) {
  if (mics < 1) throw Error(Errc::invalid_geometry, "uniform circular array needs at least one microphone");
  if (!(radius > 0.0)) throw Error(Errc::invalid_geometry, "radius must be positive");
  std::vector<SphericalCoord> c;
  c.reserve(mics);
  for (std::size_t i = 0; i < mics; ++i) {
    c.push_back({radius, kPi / 2, kTwoPi * static_cast<double>(i) / static_cast<double>(mics)});
  }
  return ArrayGeometry::from_spherical("uniform_circular_" + std::to_string(mics), std::move(c));
}

ArrayGeometry square_array(double side) {
  if (!(side > 0.0)) throw Error(Errc::invalid_geometry, "side length must be positive");
  const double h = side / 2;
  return ArrayGeometry::from_cartesian("square", {{h, h, 0.0}, {-h, h, 0.0}, {-h, -h, 0.0}, {h, -h, 0.0}});
}

ArrayGeometry binaural_pair(double spacing) {
  if (!(spacing > 0.0)) throw Error(Errc::invalid_geometry, "spacing must be positive");
  const double h = spacing / 2;
  return ArrayGeometry::from_cartesian("binaural", {{0.0, h, 0.0}, {0.0, -h, 0.0}});
}

ArrayGeometry builtin_geometry(const GeometryKind& kind) {
  struct Visitor {
    ArrayGeometry operator()(const UniformCircular& k) const { return uniform_circular(k.mics, k.radius); }
    ArrayGeometry operator()(const Square& k) const { return square_array(k.side); }
    ArrayGeometry operator()(const Binaural& k) const { return binaural_pair(k.spacing); }
    ArrayGeometry operator()(const Custom& k) const { return ArrayGeometry::from_cartesian(k.name, k.positions); }
  };
  return std::visit(Visitor{}, kind);
}

ArrayGeometry subset_geometry(const ArrayGeometry& g, std::span<const std::size_t> indices) {
  if (indices.size() < 2) throw Error(Errc::invalid_subset, "subset needs at least two microphones");
  std::vector<bool> seen(g.size(), false);
  bool identity = indices.size() == g.size();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= g.size()) {
      throw Error(Errc::invalid_subset, "index " + std::to_string(i) + " out of range for " +
                                            std::to_string(g.size()) + " microphones");
    }
    if (seen[i]) throw Error(Errc::invalid_subset, "duplicate index " + std::to_string(i));
    seen[i] = true;
    identity = identity && i == k;
  }
  if (identity && g.centroid_referenced()) return g;

  std::vector<Vec3> positions;
  positions.reserve(indices.size());
  for (std::size_t i : indices) positions.push_back(g.positions()[i]);
  return ArrayGeometry::from_cartesian(g.name() + "_subset", std::move(positions), true);
}

double far_field_min_distance(const ArrayGeometry& g, double f_max, double c) {
  if (!(f_max > 0.0) || !(c > 0.0)) throw Error(Errc::domain, "frequency and sound speed must be positive");
  const double r = g.max_radius();
  return 8.0 * r * r * f_max / c;
}

ArrayGeometry parse_geometry_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_geometry, std::string("malformed geometry JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("mics") || !j["mics"].is_array()) {
    throw Error(Errc::invalid_geometry, "geometry JSON needs a \"mics\" array");
  }
  if (j.contains("unit") && j["unit"] != "m") {
    throw Error(Errc::invalid_geometry, "unsupported unit (only \"m\")");
  }
  std::vector<Vec3> positions;
  for (const auto& m : j["mics"]) {
    if (!m.is_array() || m.size() != 3 || !m[0].is_number() || !m[1].is_number() || !m[2].is_number()) {
      throw Error(Errc::invalid_geometry, "each mic must be an [x, y, z] number triple");
    }
    positions.push_back({m[0].get<double>(), m[1].get<double>(), m[2].get<double>()});
  }
  const std::string name = j.value("name", std::string("custom"));
  return ArrayGeometry::from_cartesian(name, std::move(positions), true);
}

ArrayGeometry load_geometry(const std::filesystem::path& path) {
  return parse_geometry_json(read_file(path));
}

std::string geometry_to_json(const ArrayGeometry& g) {
  nlohmann::json j;
  j["name"] = g.name();
  j["unit"] = "m";
  j["mics"] = nlohmann::json::array();
  for (const auto& p : g.positions()) j["mics"].push_back({p.x, p.y, p.z});
  return j.dump(2);
}

}  // namespace shtnet
