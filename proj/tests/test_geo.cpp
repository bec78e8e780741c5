#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "destpred/geo.hpp"
#include "destpred/rng.hpp"

using namespace destpred;

namespace {

// Independent oracle: spherical law of cosines. Numerically weaker than the
// arctan form near zero, so oracle comparisons stay above ~10 m separation.
double law_of_cosines_m(const GeoPoint& a, const GeoPoint& b,
                        double r = kEarthRadiusM) {
  const double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
  const double dl = deg2rad(b.lon - a.lon);
  double c = std::sin(p1) * std::sin(p2) + std::cos(p1) * std::cos(p2) * std::cos(dl);
  c = std::clamp(c, -1.0, 1.0);
  return r * std::acos(c);
}

// The common arcsin formulation; analytically equal to the arctan form.
double arcsin_form_m(const GeoPoint& a, const GeoPoint& b,
                     double r = kEarthRadiusM) {
  const double p1 = deg2rad(a.lat), p2 = deg2rad(b.lat);
  const double dp = p2 - p1;
  const double dl = deg2rad(b.lon - a.lon);
  const double s =
      std::sin(dp / 2) * std::sin(dp / 2) +
      std::cos(p1) * std::cos(p2) * std::sin(dl / 2) * std::sin(dl / 2);
  return 2.0 * r * std::asin(std::min(1.0, std::sqrt(s)));
}

GeoPoint random_city_point(Rng& rng) {
  return {41.0 + rng.uniform() * 0.35, -8.75 + rng.uniform() * 0.30};
}

}  // namespace

TEST_CASE("distance of a point to itself is zero") {
  GeoPoint p{41.15, -8.61};
  CHECK(haversine_m(p, p) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("one degree of longitude on the equator is pi*r/180") {
  const double expected = kPi * kEarthRadiusM / 180.0;
  CHECK(haversine_m({0.0, 0.0}, {0.0, 1.0}) ==
        doctest::Approx(expected).epsilon(0.1 / expected));
}

TEST_CASE("city-scale pair matches the law-of-cosines oracle") {
  GeoPoint a{41.1579, -8.6291}, b{41.2481, -8.6814};
  CHECK(std::abs(haversine_m(a, b) - law_of_cosines_m(a, b)) < 0.5);
}

TEST_CASE("1000 random city pairs stay within 0.5 m of the oracle") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    GeoPoint a = random_city_point(rng), b = random_city_point(rng);
    if (haversine_m(a, b) < 10.0) continue;  // oracle is weak near zero
    CHECK(std::abs(haversine_m(a, b) - law_of_cosines_m(a, b)) < 0.5);
  }
}

TEST_CASE("arctan and arcsin formulations agree to 1e-9 relative") {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    GeoPoint a = random_city_point(rng), b = random_city_point(rng);
    const double h = haversine_m(a, b);
    const double s = arcsin_form_m(a, b);
    CHECK(std::abs(h - s) <= 1e-9 * std::max(1.0, std::max(h, s)));
  }
}

TEST_CASE("distance is symmetric") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    GeoPoint a = random_city_point(rng), b = random_city_point(rng);
    CHECK(haversine_m(a, b) == doctest::Approx(haversine_m(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("triangle inequality holds on random city triples") {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    GeoPoint a = random_city_point(rng), b = random_city_point(rng),
             c = random_city_point(rng);
    CHECK(haversine_m(a, c) <= haversine_m(a, b) + haversine_m(b, c) + 1e-6);
  }
}

TEST_CASE("antipodal points do not produce NaN") {
  const double d = haversine_m({90.0, 0.0}, {-90.0, 0.0});
  CHECK(std::isfinite(d));
  CHECK(d == doctest::Approx(kPi * kEarthRadiusM).epsilon(1e-6));
}

TEST_CASE("custom sphere radius scales the distance linearly") {
  GeoPoint a{0.0, 0.0}, b{0.0, 1.0};
  CHECK(haversine_m(a, b, 2.0 * kEarthRadiusM) ==
        doctest::Approx(2.0 * haversine_m(a, b)).epsilon(1e-12));
}

TEST_CASE("path length of a single point is zero, empty throws") {
  std::vector<GeoPoint> one{{41.15, -8.61}};
  CHECK(path_length_m(one) == 0.0);
  std::vector<GeoPoint> none;
  CHECK_THROWS_AS(path_length_m(none), std::invalid_argument);
}

TEST_CASE("collinear equator hops add up") {
  std::vector<GeoPoint> pts{{0.0, 0.0}, {0.0, 0.01}, {0.0, 0.02}};
  const double hop = haversine_m(pts[0], pts[1]);
  CHECK(path_length_m(pts) == doctest::Approx(2.0 * hop).epsilon(1e-12));
}

TEST_CASE("path length equals an independent pairwise summation") {
  Rng rng(13);
  std::vector<GeoPoint> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(random_city_point(rng));
  double expect = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    expect += law_of_cosines_m(pts[i - 1], pts[i]);
  }
  CHECK(path_length_m(pts) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("path length is at least the endpoint beeline") {
  Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 8; ++i) pts.push_back(random_city_point(rng));
    CHECK(path_length_m(pts) >= haversine_m(pts.front(), pts.back()) - 1e-9);
  }
}

TEST_CASE("one-hot weight picks that point exactly") {
  std::vector<GeoPoint> pts{{41.1, -8.6}, {41.2, -8.7}, {41.3, -8.5}};
  std::vector<double> w{0.0, 1.0, 0.0};
  CHECK(weighted_mean_point(pts, w) == pts[1]);
}

TEST_CASE("equal weights on two points give the midpoint") {
  std::vector<GeoPoint> pts{{41.1, -8.6}, {41.3, -8.4}};
  std::vector<double> w{0.5, 0.5};
  GeoPoint m = weighted_mean_point(pts, w);
  CHECK(m.lat == doctest::Approx(41.2).epsilon(1e-12));
  CHECK(m.lon == doctest::Approx(-8.5).epsilon(1e-12));
}

TEST_CASE("weighted mean matches an independent dot product") {
  Rng rng(19);
  std::vector<GeoPoint> pts;
  std::vector<double> w;
  double norm = 0.0;
  for (int i = 0; i < 5; ++i) {
    pts.push_back(random_city_point(rng));
    w.push_back(rng.uniform() + 0.01);
    norm += w.back();
  }
  for (auto& x : w) x /= norm;
  double lat = 0.0, lon = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    lat += w[i] * pts[i].lat;
    lon += w[i] * pts[i].lon;
  }
  GeoPoint m = weighted_mean_point(pts, w);
  CHECK(m.lat == doctest::Approx(lat).epsilon(1e-12));
  CHECK(m.lon == doctest::Approx(lon).epsilon(1e-12));
}

TEST_CASE("weighted mean stays inside the coordinate envelope") {
  Rng rng(23);
  std::vector<GeoPoint> pts;
  std::vector<double> w(6, 1.0 / 6.0);
  for (int i = 0; i < 6; ++i) pts.push_back(random_city_point(rng));
  GeoPoint m = weighted_mean_point(pts, w);
  auto [lo, hi] = std::minmax_element(
      pts.begin(), pts.end(),
      [](const GeoPoint& a, const GeoPoint& b) { return a.lat < b.lat; });
  CHECK(m.lat >= lo->lat);
  CHECK(m.lat <= hi->lat);
}

TEST_CASE("non-normalized weights are rejected") {
  std::vector<GeoPoint> pts{{41.1, -8.6}, {41.2, -8.7}};
  std::vector<double> w{0.5, 0.2};
  CHECK_THROWS_AS(weighted_mean_point(pts, w), std::invalid_argument);
}

TEST_CASE("target on the ray has distance zero") {
  GeoPoint origin{41.10, -8.60}, through{41.12, -8.60}, target{41.15, -8.60};
  CHECK(point_to_ray_distance_m(origin, through, target) < 1.0);
}

TEST_CASE("ray distance matches hand geometry at small scale") {
  GeoPoint origin{0.0, 0.0}, through{0.0, 0.1}, target{0.1, 0.2};
  const double expected = haversine_m({0.0, 0.2}, {0.1, 0.2});
  const double got = point_to_ray_distance_m(origin, through, target);
  CHECK(std::abs(got - expected) / expected < 0.01);
}

TEST_CASE("target behind the ray start measures distance to the start") {
  GeoPoint origin{0.0, 0.0}, through{0.0, 0.1}, target{0.0, -0.2};
  const double expected = haversine_m(through, target);
  CHECK(point_to_ray_distance_m(origin, through, target) ==
        doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("degenerate heading is rejected") {
  GeoPoint p{41.15, -8.61};
  CHECK_THROWS_AS(point_to_ray_distance_m(p, p, {41.2, -8.6}),
                  std::invalid_argument);
}

TEST_CASE("coordinate validity covers the closed ranges") {
  CHECK(is_valid({90.0, 180.0}));
  CHECK(is_valid({-90.0, -180.0}));
  CHECK_FALSE(is_valid({90.1, 0.0}));
  CHECK_FALSE(is_valid({0.0, -180.5}));
}
