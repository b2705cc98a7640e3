#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "shtnet/error.hpp"
#include "shtnet/geometry.hpp"

using namespace shtnet;
using std::numbers::pi;

namespace {

double distance(const Vec3& a, const Vec3& b) {
  return std::hypot(a.x - b.x, a.y - b.y, a.z - b.z);
}

double angle_diff(double a, double b) {
  const double d = std::fmod(std::abs(a - b), 2 * pi);
  return std::min(d, 2 * pi - d);
}

}  // namespace

TEST_CASE("cartesian_to_spherical on axis points") {
  auto z = cartesian_to_spherical(0, 0, 1);
  CHECK(z.r == doctest::Approx(1.0));
  CHECK(z.theta == 0.0);
  CHECK(z.phi == 0.0);

  auto x = cartesian_to_spherical(1, 0, 0);
  CHECK(x.r == 1.0);
  CHECK(x.theta == doctest::Approx(pi / 2));
  CHECK(x.phi == 0.0);

  auto ny = cartesian_to_spherical(0, -1, 0);
  CHECK(ny.r == 1.0);
  CHECK(ny.theta == doctest::Approx(pi / 2));
  CHECK(ny.phi == doctest::Approx(3 * pi / 2));

  auto o = cartesian_to_spherical(0, 0, 0);
  CHECK(o.r == 0.0);
  CHECK(o.theta == 0.0);
  CHECK(o.phi == 0.0);
}

TEST_CASE("spherical_to_cartesian examples") {
  auto a = spherical_to_cartesian({1, 0, 0});
  CHECK(a.x == doctest::Approx(0.0));
  CHECK(a.y == doctest::Approx(0.0));
  CHECK(a.z == doctest::Approx(1.0));

  auto b = spherical_to_cartesian({2, pi / 2, pi});
  CHECK(b.x == doctest::Approx(-2.0));
  CHECK(std::abs(b.y) < 1e-15);
  CHECK(b.z == 0.0);

  auto c = spherical_to_cartesian({0, 1.3, 4.0});
  CHECK(c.x == 0.0);
  CHECK(c.y == 0.0);
  CHECK(c.z == 0.0);
}

TEST_CASE("coordinate round trip over random points") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> r(1e-6, 10.0);
  std::uniform_real_distribution<double> th(1e-3, pi - 1e-3);
  std::uniform_real_distribution<double> ph(0.0, 2 * pi);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const SphericalCoord s{r(rng), th(rng), ph(rng)};
    const SphericalCoord back = cartesian_to_spherical(spherical_to_cartesian(s));
    worst = std::max({worst, std::abs(back.r - s.r) / std::max(1.0, s.r), std::abs(back.theta - s.theta),
                      angle_diff(back.phi, s.phi)});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("normalize clamps near-boundary polar angles and wraps azimuth") {
  auto c = normalize({1.0, pi + 5e-13, -pi / 2});
  CHECK(c.theta == pi);
  CHECK(c.phi == doctest::Approx(3 * pi / 2));
  CHECK_THROWS_AS(normalize({1.0, pi + 1e-6, 0.0}), Error);
  CHECK_THROWS_AS(normalize({-1.0, 0.0, 0.0}), Error);
}

TEST_CASE("builtin geometries") {
  SUBCASE("uniform circular") {
    auto g = uniform_circular(4, 0.05);
    REQUIRE(g.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(g.mics()[i].r == 0.05);
      CHECK(g.mics()[i].theta == pi / 2);
      CHECK(g.mics()[i].phi == doctest::Approx(i * pi / 2));
      CHECK(g.positions()[i].z == 0.0);
    }
    CHECK(g.centroid_referenced());
  }
  SUBCASE("binaural") {
    auto g = builtin_geometry(Binaural{0.2});
    REQUIRE(g.size() == 2);
    CHECK(g.positions()[0].x == 0.0);
    CHECK(g.positions()[0].y == doctest::Approx(0.1));
    CHECK(g.positions()[1].y == doctest::Approx(-0.1));
    CHECK(g.positions()[0].z == 0.0);
  }
  SUBCASE("square") {
    auto g = builtin_geometry(Square{0.1});
    REQUIRE(g.size() == 4);
    for (const auto& m : g.mics()) {
      CHECK(m.theta == pi / 2);
      CHECK(m.r == doctest::Approx(0.1 / std::sqrt(2.0)));
    }
  }
  SUBCASE("custom pair is centroid referenced") {
    auto g = builtin_geometry(Custom{{{1, 0, 0}, {-1, 0, 0}}});
    CHECK(g.mics()[0].r == 1.0);
    CHECK(g.mics()[1].r == 1.0);
    auto off = builtin_geometry(Custom{{{3, 1, 2}, {1, 1, 2}, {2, 4, 2}}});
    const Vec3 m = off.centroid();
    CHECK(std::hypot(m.x, m.y, m.z) < 1e-9);
  }
  SUBCASE("non-positive dimensions are rejected") {
    CHECK_THROWS_AS(uniform_circular(4, 0.0), Error);
    CHECK_THROWS_AS(uniform_circular(0, 0.05), Error);
    CHECK_THROWS_AS(square_array(-1.0), Error);
    CHECK_THROWS_AS(binaural_pair(0.0), Error);
    try {
      binaural_pair(0.0);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_geometry);
    }
  }
}

TEST_CASE("subset_geometry") {
  const auto g = uniform_circular(8, 0.05);

  SUBCASE("full index set is identity") {
    const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5, 6, 7};
    const auto s = subset_geometry(g, all);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(std::abs(s.mics()[i].r - g.mics()[i].r) < 1e-9);
      CHECK(std::abs(s.mics()[i].theta - g.mics()[i].theta) < 1e-9);
      CHECK(angle_diff(s.mics()[i].phi, g.mics()[i].phi) < 1e-9);
    }
    const auto twice = subset_geometry(s, all);
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(twice.mics()[i].r == s.mics()[i].r);
      CHECK(twice.mics()[i].theta == s.mics()[i].theta);
      CHECK(twice.mics()[i].phi == s.mics()[i].phi);
    }
  }

  SUBCASE("antipodal pair") {
    const std::vector<std::size_t> idx{0, 4};
    const auto s = subset_geometry(g, idx);
    CHECK(s.mics()[0].r == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(s.mics()[1].r == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(angle_diff(s.mics()[0].phi, s.mics()[1].phi) == doctest::Approx(pi));
  }

  SUBCASE("three-mic arc matches brute-force centroid") {
    const std::vector<std::size_t> idx{0, 1, 2};
    const auto s = subset_geometry(g, idx);
    Vec3 c;
    for (auto i : idx) {
      const double phi = 2 * pi * static_cast<double>(i) / 8;
      c.x += 0.05 * std::cos(phi) / 3;
      c.y += 0.05 * std::sin(phi) / 3;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      const double phi = 2 * pi * static_cast<double>(idx[k]) / 8;
      const Vec3 expect{0.05 * std::cos(phi) - c.x, 0.05 * std::sin(phi) - c.y, 0.0};
      CHECK(distance(s.positions()[k], expect) < 1e-15);
      CHECK(s.mics()[k].r == doctest::Approx(std::hypot(expect.x, expect.y)).epsilon(1e-12));
    }
    // outer mics are mirror images about the middle mic's axis
    CHECK(s.mics()[0].r == doctest::Approx(s.mics()[2].r).epsilon(1e-12));
    CHECK(s.centroid_referenced());
  }

  SUBCASE("pairwise distances are preserved") {
    const auto sq = builtin_geometry(Custom{{{0.1, 0.3, -0.2}, {0.4, -0.1, 0.0}, {-0.3, 0.2, 0.05}, {0.0, 0.0, 0.3}}});
    const std::vector<std::size_t> idx{3, 0, 2};
    const auto s = subset_geometry(sq, idx);
    for (std::size_t a = 0; a < 3; ++a) {
      for (std::size_t b = 0; b < 3; ++b) {
        CHECK(distance(s.positions()[a], s.positions()[b]) ==
              doctest::Approx(distance(sq.positions()[idx[a]], sq.positions()[idx[b]])).epsilon(1e-14));
      }
    }
  }

  SUBCASE("invalid subsets") {
    CHECK_THROWS_AS(subset_geometry(g, std::vector<std::size_t>{1}), Error);
    CHECK_THROWS_AS(subset_geometry(g, std::vector<std::size_t>{1, 1}), Error);
    CHECK_THROWS_AS(subset_geometry(g, std::vector<std::size_t>{1, 8}), Error);
    try {
      subset_geometry(g, std::vector<std::size_t>{2, 2});
    } catch (const Error& e) {
      CHECK(e.code() == Errc::invalid_subset);
    }
  }
}

TEST_CASE("far_field_min_distance") {
  CHECK(far_field_min_distance(uniform_circular(4, 0.05), 8000, 343) == doctest::Approx(0.4665).epsilon(1e-3));
  CHECK(far_field_min_distance(uniform_circular(4, 0.1), 16000, 343) == doctest::Approx(3.732).epsilon(1e-3));
  const auto point = ArrayGeometry::from_cartesian("point", {{0, 0, 0}});
  CHECK(far_field_min_distance(point, 8000, 343) == 0.0);
}

TEST_CASE("geometry JSON round trip and errors") {
  const auto g = square_array(0.1);
  const auto back = parse_geometry_json(geometry_to_json(g));
  REQUIRE(back.size() == g.size());
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(distance(back.positions()[i], g.positions()[i]) < 1e-15);
  CHECK(back.name() == "square");

  const auto shifted = parse_geometry_json(R"({"name":"x","unit":"m","mics":[[1,1,1],[3,1,1]]})");
  CHECK(shifted.positions()[0].x == doctest::Approx(-1.0));
  CHECK(shifted.centroid_referenced());

  CHECK_THROWS_AS(parse_geometry_json("{"), Error);
  CHECK_THROWS_AS(parse_geometry_json(R"({"mics":[[1,2]]})"), Error);
  CHECK_THROWS_AS(parse_geometry_json(R"({"unit":"cm","mics":[[1,2,3]]})"), Error);
  CHECK_THROWS_AS(parse_geometry_json(R"({"mics":[]})"), Error);
}
