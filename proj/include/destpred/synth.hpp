#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "destpred/routing.hpp"
#include "destpred/trajectory.hpp"

namespace destpred {

// Desk-scale stand-in for the taxi datasets: a grid road network with hub
// origins and POI destinations whose choice depends on time of day, origin
// hub and weather, so the trip metadata carries real signal.
struct SynthConfig {
  std::uint64_t seed = 42;
  int n_trips = 1000;
  int grid_size = 20;        // nodes per side
  int n_pois = 12;           // destination candidates (>= 8)
  double jitter_sigma_m = 20.0;
  double spacing_m = 250.0;  // grid edge length
  double speed_mps = 7.0;
  double base_lat = 41.15;   // city center
  double base_lon = -8.61;
  int n_days = 14;
  double min_trip_m = 900.0;  // reject shorter origin->destination paths
  double scattered_prob = 0.15;  // chance a trip heads to an off-corridor POI
};

struct SyntheticCity {
  std::vector<Trajectory> trips;
  RoadGraph graph;
  // Hourly rows for an optional weather CSV; joining them back reproduces
  // exactly the bins already attached to the trips.
  struct WeatherRow {
    std::string date;
    int hour;
    double temperature_c;
    double precip_mm;
  };
  std::vector<WeatherRow> weather;
};

SyntheticCity generate_synthetic_city(const SynthConfig& cfg);

void save_weather_csv(const std::vector<SyntheticCity::WeatherRow>& rows,
                      const std::string& path);

}  // namespace destpred
