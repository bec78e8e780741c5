#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "destpred/geo.hpp"

namespace destpred {

// Bin value for metadata that could not be resolved (e.g. no weather file).
inline constexpr int kUnknownBin = -1;

// Metadata vocabulary sizes, excluding the `unknown` slot models append.
inline constexpr int kTimeOfDayBins = 96;  // quarter hours
inline constexpr int kDayOfWeekBins = 7;   // 0 = Monday
inline constexpr int kTemperatureBins = 10;  // 5 degC buckets over [-10, 40)
inline constexpr int kPrecipitationBins = 4;  // none/light/moderate/heavy

struct TripMetadata {
  int time_of_day_bin = kUnknownBin;   // 0..95
  int day_of_week = kUnknownBin;       // 0..6
  int temperature_bin = kUnknownBin;   // 0..9 or unknown
  int precipitation_bin = kUnknownBin; // 0..3 or unknown

  bool operator==(const TripMetadata&) const = default;
};

struct Trajectory {
  std::string id;
  std::vector<GeoPoint> points;
  std::int64_t start_time = 0;             // unix seconds
  std::vector<std::int64_t> timestamps;    // per point, non-decreasing
  TripMetadata meta;

  std::size_t size() const { return points.size(); }
  double duration_s() const {
    return timestamps.size() >= 2
               ? static_cast<double>(timestamps.back() - timestamps.front())
               : 0.0;
  }
  const GeoPoint& destination() const { return points.back(); }
};

// Calendar helpers operate in UTC so runs do not depend on the host timezone.
int time_of_day_bin(std::int64_t unix_s);
int day_of_week(std::int64_t unix_s);
int temperature_bin(double celsius);
int precipitation_bin(double mm);
std::string utc_date(std::int64_t unix_s);  // "YYYY-MM-DD"
int utc_hour(std::int64_t unix_s);

// Canonical trip store, one JSON object per line:
//   {"id":..., "start_time":..., "interval_s":15 | "timestamps":[...],
//    "points":[[lat,lon],...],
//    "meta":{"time_bin":..,"day_of_week":..,"temp_bin":..,"precip_bin":..}}
// Unknown metadata bins are stored as -1.
void save_trips_jsonl(const std::string& path,
                      const std::vector<Trajectory>& trips);
std::vector<Trajectory> load_trips_jsonl(const std::string& path);

}  // namespace destpred
