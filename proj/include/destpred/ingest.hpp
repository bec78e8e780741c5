#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "destpred/trajectory.hpp"

namespace destpred {

struct ParseStats {
  std::size_t rows = 0;             // data rows seen
  std::size_t parsed = 0;           // trajectories produced
  std::size_t rejected = 0;         // malformed rows/lines skipped
  std::size_t dropped_missing = 0;  // MISSING_DATA=true rows (Porto only)
};

// Kaggle Porto schema: TRIP_ID,CALL_TYPE,ORIGIN_CALL,ORIGIN_STAND,TAXI_ID,
// TIMESTAMP,DAY_TYPE,MISSING_DATA,POLYLINE. POLYLINE is a JSON array of
// [lon, lat] pairs sampled every 15 s. Rows with MISSING_DATA true are
// dropped; malformed rows are rejected and counted. A missing or wrong
// header is fatal.
std::vector<Trajectory> parse_porto_csv(const std::string& path,
                                        ParseStats* stats = nullptr);

// CRAWDAD San Francisco cabs: one text file per taxi, lines
// "lat lon occupancy unix_time". Lines are sorted by time per taxi and each
// maximal run with occupancy=1 becomes one trajectory (pickup to dropoff).
std::vector<Trajectory> parse_crawdad_sf(const std::string& dir,
                                         ParseStats* stats = nullptr);

// Hourly weather, CSV header "date,hour,temperature_c,precip_mm" with date
// as YYYY-MM-DD (UTC). Trips join on the UTC date+hour of their start time;
// missing rows leave the bins unknown.
struct WeatherTable {
  // "YYYY-MM-DD HH" -> (temperature_c, precip_mm)
  std::vector<std::pair<std::string, std::pair<double, double>>> rows;

  static WeatherTable load(const std::string& path);
  std::optional<std::pair<double, double>> lookup(const std::string& date,
                                                  int hour) const;
};

// Fills temperature/precipitation bins from a weather CSV. Returns the number
// of trips joined. An unreadable file leaves every bin unknown and emits a
// warning on stderr.
std::size_t attach_weather(std::vector<Trajectory>& trips,
                           const std::string& weather_path);

struct DatasetSplit {
  std::vector<Trajectory> train;
  std::vector<Trajectory> validation;
  std::vector<Trajectory> test;
};

// Seeded shuffle then a 90/5/5 cut. Requires at least 20 trips.
DatasetSplit split_dataset(std::vector<Trajectory> trips, std::uint64_t seed);

}  // namespace destpred
