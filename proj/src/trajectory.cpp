#include "destpred/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace destpred {

namespace {
constexpr std::int64_t kSecondsPerDay = 86'400;

// Days-from-civil / civil-from-days (Howard Hinnant's algorithms).
void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719'468;
  const std::int64_t era = (z >= 0 ? z : z - 146'096) / 146'097;
  const unsigned doe = static_cast<unsigned>(z - era * 146'097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36'524 - doe / 146'096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
  y = static_cast<int>(yy + (m <= 2));
}
}  // namespace

int time_of_day_bin(std::int64_t unix_s) {
  std::int64_t sod = unix_s % kSecondsPerDay;
  if (sod < 0) sod += kSecondsPerDay;
  return static_cast<int>(sod / 900);
}

int day_of_week(std::int64_t unix_s) {
  std::int64_t days = unix_s / kSecondsPerDay;
  if (unix_s % kSecondsPerDay < 0) --days;
  // 1970-01-01 was a Thursday; 0 = Monday.
  std::int64_t dow = (days + 3) % 7;
  if (dow < 0) dow += 7;
  return static_cast<int>(dow);
}

int temperature_bin(double celsius) {
  const int bin = static_cast<int>(std::floor((celsius + 10.0) / 5.0));
  return std::clamp(bin, 0, kTemperatureBins - 1);
}

int precipitation_bin(double mm) {
  if (mm <= 0.0) return 0;
  if (mm <= 1.0) return 1;
  if (mm <= 5.0) return 2;
  return 3;
}

std::string utc_date(std::int64_t unix_s) {
  std::int64_t days = unix_s / kSecondsPerDay;
  if (unix_s % kSecondsPerDay < 0) --days;
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

int utc_hour(std::int64_t unix_s) {
  std::int64_t sod = unix_s % kSecondsPerDay;
  if (sod < 0) sod += kSecondsPerDay;
  return static_cast<int>(sod / 3600);
}

void save_trips_jsonl(const std::string& path,
                      const std::vector<Trajectory>& trips) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& t : trips) {
    nlohmann::json j;
    j["id"] = t.id;
    j["start_time"] = t.start_time;

    bool uniform15 = t.timestamps.size() == t.points.size();
    for (std::size_t n = 0; uniform15 && n < t.timestamps.size(); ++n) {
      uniform15 = t.timestamps[n] ==
                  t.start_time + 15 * static_cast<std::int64_t>(n);
    }
    if (uniform15) {
      j["interval_s"] = 15;
    } else {
      j["timestamps"] = t.timestamps;
    }

    auto points = nlohmann::json::array();
    for (const auto& p : t.points) points.push_back({p.lat, p.lon});
    j["points"] = std::move(points);
    j["meta"] = {{"time_bin", t.meta.time_of_day_bin},
                 {"day_of_week", t.meta.day_of_week},
                 {"temp_bin", t.meta.temperature_bin},
                 {"precip_bin", t.meta.precipitation_bin}};
    out << j.dump() << '\n';
  }
}

std::vector<Trajectory> load_trips_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<Trajectory> trips;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": bad JSON line: " + e.what());
    }
    Trajectory t;
    t.id = j.at("id").get<std::string>();
    t.start_time = j.at("start_time").get<std::int64_t>();
    for (const auto& p : j.at("points")) {
      t.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    if (j.contains("timestamps")) {
      t.timestamps = j["timestamps"].get<std::vector<std::int64_t>>();
    } else {
      const std::int64_t step = j.value("interval_s", 15);
      t.timestamps.resize(t.points.size());
      for (std::size_t n = 0; n < t.points.size(); ++n) {
        t.timestamps[n] = t.start_time + step * static_cast<std::int64_t>(n);
      }
    }
    if (t.timestamps.size() != t.points.size()) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": timestamps/points length mismatch");
    }
    if (j.contains("meta")) {
      const auto& m = j["meta"];
      t.meta.time_of_day_bin = m.value("time_bin", kUnknownBin);
      t.meta.day_of_week = m.value("day_of_week", kUnknownBin);
      t.meta.temperature_bin = m.value("temp_bin", kUnknownBin);
      t.meta.precipitation_bin = m.value("precip_bin", kUnknownBin);
    }
    trips.push_back(std::move(t));
  }
  return trips;
}

}  // namespace destpred
