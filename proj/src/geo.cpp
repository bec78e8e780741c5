#include "destpred/geo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace destpred {

double haversine_m(const GeoPoint& a, const GeoPoint& b, double radius_m) {
  const double phi_a = deg2rad(a.lat);
  const double phi_b = deg2rad(b.lat);
  const double dphi_half = deg2rad(b.lat - a.lat) / 2.0;
  const double dlam_half = deg2rad(b.lon - a.lon) / 2.0;

  const double sin_phi = std::sin(dphi_half);
  const double sin_lam = std::sin(dlam_half);
  double h = sin_phi * sin_phi +
             std::cos(phi_a) * std::cos(phi_b) * sin_lam * sin_lam;
  h = std::clamp(h, 0.0, 1.0 - 1e-12);
  return 2.0 * radius_m * std::atan(std::sqrt(h / (1.0 - h)));
}

double path_length_m(std::span<const GeoPoint> points, double radius_m) {
  if (points.empty()) {
    throw std::invalid_argument("empty trajectory");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    total += haversine_m(points[i - 1], points[i], radius_m);
  }
  return total;
}

GeoPoint weighted_mean_point(std::span<const GeoPoint> points,
                             std::span<const double> weights) {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("points and weights differ in length");
  }
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("not a distribution");
  }
  GeoPoint mean{0.0, 0.0};
  for (std::size_t i = 0; i < points.size(); ++i) {
    mean.lat += weights[i] * points[i].lat;
    mean.lon += weights[i] * points[i].lon;
  }
  return mean;
}

namespace {

// Local equirectangular projection centered at `c`: x east, y north, meters.
struct PlanePoint {
  double x = 0.0;
  double y = 0.0;
};

PlanePoint project(const GeoPoint& p, const GeoPoint& c, double radius_m) {
  const double cos_lat = std::cos(deg2rad(c.lat));
  return {deg2rad(p.lon - c.lon) * cos_lat * radius_m,
          deg2rad(p.lat - c.lat) * radius_m};
}

}  // namespace

double point_to_ray_distance_m(const GeoPoint& origin, const GeoPoint& through,
                               const GeoPoint& target, double radius_m) {
  const PlanePoint o = project(origin, through, radius_m);
  const PlanePoint t = project(target, through, radius_m);

  // Ray direction: from origin toward `through` (the plane origin), extended.
  const double norm = std::hypot(o.x, o.y);
  if (norm == 0.0) {
    throw std::invalid_argument("degenerate heading");
  }
  const double dx = -o.x / norm;
  const double dy = -o.y / norm;

  const double along = t.x * dx + t.y * dy;
  if (along <= 0.0) {
    return std::hypot(t.x, t.y);  // behind the ray start
  }
  return std::hypot(t.x - along * dx, t.y - along * dy);
}

}  // namespace destpred
