#include "destpred/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>
#include <utility>

#include "destpred/rng.hpp"

namespace destpred {
namespace {

constexpr std::int64_t kBaseEpoch = 1372636800;  // 2013-07-01, a Monday, UTC

struct DayWeather {
  double temp_c = 0.0;
  double precip_mm = 0.0;
};

GeoPoint lerp(const GeoPoint& a, const GeoPoint& b, double f) {
  return {a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)};
}

}  // namespace

SyntheticCity generate_synthetic_city(const SynthConfig& cfg) {
  if (cfg.grid_size < 12) {
    throw std::invalid_argument("grid_size must be >= 12");
  }
  if (cfg.n_pois < 8) {
    throw std::invalid_argument("n_pois must be >= 8");
  }
  if (cfg.n_trips < 1) {
    throw std::invalid_argument("n_trips must be >= 1");
  }
  if (cfg.n_days < 1 || cfg.n_days > 3650) {
    throw std::invalid_argument("n_days out of range");
  }
  if (cfg.spacing_m <= 0.0 || cfg.speed_mps <= 0.0 || cfg.min_trip_m <= 0.0 ||
      cfg.jitter_sigma_m < 0.0) {
    throw std::invalid_argument("spacing, speed and min_trip_m must be positive");
  }
  if (cfg.scattered_prob < 0.0 || cfg.scattered_prob > 1.0) {
    throw std::invalid_argument("scattered_prob must be in [0, 1]");
  }

  const int G = cfg.grid_size;
  const int ci = G / 2;
  const double m_per_deg_lat = kEarthRadiusM * kPi / 180.0;
  const double m_per_deg_lon =
      m_per_deg_lat * std::cos(cfg.base_lat * kPi / 180.0);
  const double dlat = cfg.spacing_m / m_per_deg_lat;
  const double dlon = cfg.spacing_m / m_per_deg_lon;

  SyntheticCity out;
  auto node_id = [G](int r, int c) { return r * G + c; };
  for (int r = 0; r < G; ++r) {
    for (int c = 0; c < G; ++c) {
      out.graph.add_node(node_id(r, c),
                         GeoPoint{cfg.base_lat + (r - ci) * dlat,
                                  cfg.base_lon + (c - ci) * dlon});
    }
  }
  for (int r = 0; r < G; ++r) {
    for (int c = 0; c < G; ++c) {
      const int id = node_id(r, c);
      if (c + 1 < G) {
        out.graph.add_edge(id, node_id(r, c + 1),
                           haversine_m(out.graph.nodes.at(id),
                                       out.graph.nodes.at(node_id(r, c + 1))));
      }
      if (r + 1 < G) {
        out.graph.add_edge(id, node_id(r + 1, c),
                           haversine_m(out.graph.nodes.at(id),
                                       out.graph.nodes.at(node_id(r + 1, c))));
      }
    }
  }
  out.graph.finalize();

  // Four radial corridors, each with a near and a far destination on the same
  // ray from the center. The prefix of a trip reveals the corridor but not
  // which of the two endpoints it is heading to; time of day carries that.
  struct Corridor {
    int near_node = 0;
    int far_node = 0;
  };
  const Corridor corridors[4] = {
      {node_id(ci, ci + 4), node_id(ci, G - 1)},  // east
      {node_id(ci, ci - 4), node_id(ci, 0)},      // west
      {node_id(ci + 4, ci), node_id(G - 1, ci)},  // north
      {node_id(ci - 4, ci), node_id(0, ci)},      // south
  };

  const int hubs[3] = {node_id(ci, ci), node_id(ci - 2, ci + 1),
                       node_id(ci + 1, ci - 2)};
  const int hub_corridors[3][2] = {{0, 2}, {1, 3}, {0, 3}};

  std::vector<int> scattered;
  {
    Rng prng(cfg.seed ^ 0xA5A5A5A5DEADBEEFull);
    const int want = cfg.n_pois - 8;
    int guard = 0;
    while (static_cast<int>(scattered.size()) < want && guard < 100000) {
      ++guard;
      const int r = static_cast<int>(prng.uniform_int(0, G - 1));
      const int c = static_cast<int>(prng.uniform_int(0, G - 1));
      if (std::abs(r - ci) + std::abs(c - ci) < 5) continue;
      const int id = node_id(r, c);
      bool taken = std::find(scattered.begin(), scattered.end(), id) !=
                   scattered.end();
      for (const auto& cor : corridors) {
        taken = taken || id == cor.near_node || id == cor.far_node;
      }
      if (!taken) scattered.push_back(id);
    }
  }

  // One weather sample per day; hourly CSV rows repeat it so a join through
  // the weather file reproduces exactly the bins attached here.
  std::vector<DayWeather> weather(static_cast<std::size_t>(cfg.n_days));
  {
    Rng wrng(cfg.seed ^ 0x9E3779B97F4A7C15ull);
    for (int d = 0; d < cfg.n_days; ++d) {
      DayWeather w;
      w.temp_c = 18.0 + 8.0 * std::sin(2.0 * kPi * d / cfg.n_days) +
                 wrng.normal(0.0, 1.5);
      const double u = wrng.uniform();
      if (u >= 0.55) {
        const double v = wrng.uniform();
        w.precip_mm = 0.2 + 11.0 * v * v;
      }
      weather[static_cast<std::size_t>(d)] = w;
      const std::int64_t day_start = kBaseEpoch + 86400LL * d;
      for (int h = 0; h < 24; ++h) {
        out.weather.push_back(
            {utc_date(day_start), h, w.temp_c, w.precip_mm});
      }
    }
  }

  // Phase windows (inclusive hours) and the probability that a corridor trip
  // heads to the far endpoint. Heavy rain pulls trips to the near endpoint.
  const int phase_lo[4] = {7, 11, 17, 22};
  const int phase_hi[4] = {9, 15, 19, 23};
  const double far_prob[4] = {0.95, 0.05, 0.95, 0.05};

  Rng rng(cfg.seed);
  std::map<std::pair<int, int>, PathResult> path_cache;
  const double step_m = cfg.speed_mps * 15.0;

  out.trips.reserve(static_cast<std::size_t>(cfg.n_trips));
  for (int t = 0; t < cfg.n_trips; ++t) {
    const int day = static_cast<int>(rng.uniform_int(0, cfg.n_days - 1));
    const int phase = static_cast<int>(rng.uniform_int(0, 3));
    const int hour =
        static_cast<int>(rng.uniform_int(phase_lo[phase], phase_hi[phase]));
    const std::int64_t start = kBaseEpoch + 86400LL * day + 3600LL * hour +
                               60LL * rng.uniform_int(0, 59) +
                               rng.uniform_int(0, 59);
    const DayWeather& dw = weather[static_cast<std::size_t>(day)];
    const int rain_bin = precipitation_bin(dw.precip_mm);

    const int hub = static_cast<int>(rng.uniform_int(0, 2));
    const int hub_r = hubs[hub] / G;
    const int hub_c = hubs[hub] % G;
    const int org_r = std::clamp(
        hub_r + static_cast<int>(rng.uniform_int(-1, 1)), 0, G - 1);
    const int org_c = std::clamp(
        hub_c + static_cast<int>(rng.uniform_int(-1, 1)), 0, G - 1);
    const int origin = node_id(org_r, org_c);

    PathResult path;
    for (int attempt = 0;; ++attempt) {
      int dest;
      if (attempt >= 8) {
        dest = corridors[hub_corridors[hub][0]].far_node;
      } else if (!scattered.empty() && rng.uniform() < cfg.scattered_prob) {
        dest = scattered[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(scattered.size()) - 1))];
      } else {
        const Corridor& cor =
            corridors[hub_corridors[hub][rng.uniform_int(0, 1)]];
        bool far;
        if (rain_bin >= 2 && rng.uniform() < 0.95) {
          far = false;
        } else {
          far = rng.uniform() < far_prob[phase];
        }
        dest = far ? cor.far_node : cor.near_node;
      }
      if (dest == origin) continue;
      auto key = std::make_pair(origin, dest);
      auto it = path_cache.find(key);
      if (it == path_cache.end()) {
        it = path_cache.emplace(key, shortest_path(out.graph, origin, dest))
                 .first;
      }
      if (it->second.cost >= cfg.min_trip_m || attempt >= 8) {
        path = it->second;
        break;
      }
    }

    std::vector<GeoPoint> poly;
    poly.reserve(path.nodes.size());
    for (int id : path.nodes) poly.push_back(out.graph.nodes.at(id));
    std::vector<double> cum(poly.size(), 0.0);
    for (std::size_t i = 1; i < poly.size(); ++i) {
      cum[i] = cum[i - 1] + haversine_m(poly[i - 1], poly[i]);
    }
    const double total = cum.back();
    const int n_steps = static_cast<int>(std::floor(total / step_m));

    Trajectory trip;
    trip.id = "synth-" + std::to_string(t);
    trip.start_time = start;
    trip.points.reserve(static_cast<std::size_t>(n_steps) + 2);
    std::size_t seg = 1;
    for (int k = 0; k <= n_steps; ++k) {
      const double d = k * step_m;
      while (seg + 1 < cum.size() && cum[seg] < d) ++seg;
      const double span = cum[seg] - cum[seg - 1];
      const double f = span > 0.0 ? (d - cum[seg - 1]) / span : 0.0;
      trip.points.push_back(lerp(poly[seg - 1], poly[seg], f));
    }
    if (total - n_steps * step_m > 1e-6) {
      trip.points.push_back(poly.back());
    } else {
      trip.points.back() = poly.back();
    }
    // Idle pings at the dropoff while the passenger pays and gets out.
    const int dwell = static_cast<int>(rng.uniform_int(3, 5));
    for (int k = 0; k < dwell; ++k) trip.points.push_back(poly.back());
    if (cfg.jitter_sigma_m > 0.0) {
      for (auto& p : trip.points) {
        p.lat += rng.normal(0.0, cfg.jitter_sigma_m) / m_per_deg_lat;
        p.lon += rng.normal(0.0, cfg.jitter_sigma_m) / m_per_deg_lon;
      }
    }
    trip.timestamps.resize(trip.points.size());
    for (std::size_t k = 0; k < trip.timestamps.size(); ++k) {
      trip.timestamps[k] = start + 15 * static_cast<std::int64_t>(k);
    }
    trip.meta.time_of_day_bin = time_of_day_bin(start);
    trip.meta.day_of_week = day_of_week(start);
    trip.meta.temperature_bin = temperature_bin(dw.temp_c);
    trip.meta.precipitation_bin = precipitation_bin(dw.precip_mm);
    out.trips.push_back(std::move(trip));
  }
  return out;
}

void save_weather_csv(const std::vector<SyntheticCity::WeatherRow>& rows,
                      const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << "date,hour,temperature_c,precip_mm\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%d,%.2f,%.2f\n", r.date.c_str(),
                  r.hour, r.temperature_c, r.precip_mm);
    f << buf;
  }
}

}  // namespace destpred
