#pragma once

#include <span>
#include <vector>

namespace destpred {

// Mean earth radius in meters. The sphere radius every distance in this
// project is computed against; tests may pass a different radius explicitly.
inline constexpr double kEarthRadiusM = 6'371'000.0;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool operator==(const GeoPoint&) const = default;
};

inline bool is_valid(const GeoPoint& p) {
  return p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0;
}

struct BBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool contains(const GeoPoint& p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min &&
           p.lon <= lon_max;
  }
};

// Great-circle distance in meters on a sphere of radius `radius_m`.
// Uses the arctan form 2*r*atan(sqrt(a/(1-a))); the intermediate `a` is
// clamped to [0, 1-1e-12] so antipodal rounding cannot produce NaN.
double haversine_m(const GeoPoint& a, const GeoPoint& b,
                   double radius_m = kEarthRadiusM);

// Sum of consecutive haversine distances. A single point has length 0.
// Throws std::invalid_argument("empty trajectory") on an empty span.
double path_length_m(std::span<const GeoPoint> points,
                     double radius_m = kEarthRadiusM);

// Component-wise weighted average of (lat, lon). Weights must have the same
// length as points and sum to 1 within 1e-6, otherwise
// std::invalid_argument("not a distribution") is thrown.
GeoPoint weighted_mean_point(std::span<const GeoPoint> points,
                             std::span<const double> weights);

// Distance in meters from `target` to the ray that starts at `through` and
// points away from `origin`. Computed in a local equirectangular plane
// centered at `through`; targets behind the ray start measure their distance
// to `through`. Throws std::invalid_argument("degenerate heading") when
// origin and through project to the same point.
double point_to_ray_distance_m(const GeoPoint& origin, const GeoPoint& through,
                               const GeoPoint& target,
                               double radius_m = kEarthRadiusM);

}  // namespace destpred
