#include "destpred/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "destpred/rng.hpp"

namespace destpred {

namespace {

// RFC-4180-style field split for a single line (quoted fields may contain
// commas and doubled quotes; embedded newlines are not supported, the Kaggle
// file has none).
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool iequals(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

std::vector<Trajectory> parse_porto_csv(const std::string& path,
                                        ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> expected = {
      "TRIP_ID",   "CALL_TYPE", "ORIGIN_CALL",  "ORIGIN_STAND", "TAXI_ID",
      "TIMESTAMP", "DAY_TYPE",  "MISSING_DATA", "POLYLINE"};
  if (header != expected) {
    throw std::runtime_error(path + ": unexpected header, not a Porto CSV");
  }

  ParseStats st;
  std::vector<Trajectory> trips;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++st.rows;
    const auto fields = split_csv_line(line);
    if (fields.size() != expected.size()) {
      ++st.rejected;
      continue;
    }
    if (iequals(fields[7], "true")) {
      ++st.dropped_missing;
      continue;
    }
    Trajectory t;
    t.id = fields[0];
    nlohmann::json polyline;
    try {
      t.start_time = std::stoll(fields[5]);
      polyline = nlohmann::json::parse(fields[8]);
    } catch (const std::exception&) {
      ++st.rejected;
      continue;
    }
    if (!polyline.is_array()) {
      ++st.rejected;
      continue;
    }
    bool ok = true;
    for (const auto& pt : polyline) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() ||
          !pt[1].is_number()) {
        ok = false;
        break;
      }
      // POLYLINE stores [lon, lat]
      const GeoPoint p{pt[1].get<double>(), pt[0].get<double>()};
      if (!is_valid(p)) {
        ok = false;
        break;
      }
      t.points.push_back(p);
    }
    if (!ok) {
      ++st.rejected;
      continue;
    }
    t.timestamps.resize(t.points.size());
    for (std::size_t n = 0; n < t.points.size(); ++n) {
      t.timestamps[n] = t.start_time + 15 * static_cast<std::int64_t>(n);
    }
    t.meta.time_of_day_bin = time_of_day_bin(t.start_time);
    t.meta.day_of_week = day_of_week(t.start_time);
    trips.push_back(std::move(t));
    ++st.parsed;
  }
  if (stats) *stats = st;
  return trips;
}

std::vector<Trajectory> parse_crawdad_sf(const std::string& dir,
                                         ParseStats* stats) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir);
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  ParseStats st;
  std::vector<Trajectory> trips;
  for (const auto& file : files) {
    std::ifstream in(file);
    if (!in) continue;

    struct Sample {
      std::int64_t time;
      GeoPoint p;
      int occupied;
    };
    std::vector<Sample> samples;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      ++st.rows;
      std::istringstream ss(line);
      double lat, lon;
      int occ;
      std::int64_t ts;
      if (!(ss >> lat >> lon >> occ >> ts) || !is_valid({lat, lon}) ||
          (occ != 0 && occ != 1)) {
        ++st.rejected;
        continue;
      }
      samples.push_back({ts, {lat, lon}, occ});
    }
    std::stable_sort(samples.begin(), samples.end(),
                     [](const Sample& a, const Sample& b) {
                       return a.time < b.time;
                     });

    const std::string taxi = file.stem().string();
    std::size_t run_index = 0;
    std::size_t i = 0;
    while (i < samples.size()) {
      if (samples[i].occupied != 1) {
        ++i;
        continue;
      }
      std::size_t j = i;
      while (j < samples.size() && samples[j].occupied == 1) ++j;
      Trajectory t;
      t.id = taxi + ":" + std::to_string(run_index++);
      for (std::size_t k = i; k < j; ++k) {
        t.points.push_back(samples[k].p);
        t.timestamps.push_back(samples[k].time);
      }
      t.start_time = t.timestamps.front();
      t.meta.time_of_day_bin = time_of_day_bin(t.start_time);
      t.meta.day_of_week = day_of_week(t.start_time);
      trips.push_back(std::move(t));
      ++st.parsed;
      i = j;
    }
  }
  if (stats) *stats = st;
  return trips;
}

WeatherTable WeatherTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (split_csv_line(line) !=
      std::vector<std::string>{"date", "hour", "temperature_c", "precip_mm"}) {
    throw std::runtime_error(path + ": unexpected weather header");
  }
  WeatherTable table;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) continue;
    try {
      const int hour = std::stoi(fields[1]);
      char key[32];
      std::snprintf(key, sizeof(key), "%s %02d", fields[0].c_str(), hour);
      table.rows.push_back(
          {key, {std::stod(fields[2]), std::stod(fields[3])}});
    } catch (const std::exception&) {
      continue;
    }
  }
  std::sort(table.rows.begin(), table.rows.end());
  return table;
}

std::optional<std::pair<double, double>> WeatherTable::lookup(
    const std::string& date, int hour) const {
  char key[32];
  std::snprintf(key, sizeof(key), "%s %02d", date.c_str(), hour);
  auto it = std::lower_bound(
      rows.begin(), rows.end(), std::string(key),
      [](const auto& row, const std::string& k) { return row.first < k; });
  if (it == rows.end() || it->first != key) return std::nullopt;
  return it->second;
}

std::size_t attach_weather(std::vector<Trajectory>& trips,
                           const std::string& weather_path) {
  WeatherTable table;
  try {
    table = WeatherTable::load(weather_path);
  } catch (const std::exception& e) {
    std::cerr << "warning: weather unavailable (" << e.what()
              << "); leaving bins unknown\n";
    for (auto& t : trips) {
      t.meta.temperature_bin = kUnknownBin;
      t.meta.precipitation_bin = kUnknownBin;
    }
    return 0;
  }
  std::size_t joined = 0;
  for (auto& t : trips) {
    const auto w = table.lookup(utc_date(t.start_time), utc_hour(t.start_time));
    if (w) {
      t.meta.temperature_bin = temperature_bin(w->first);
      t.meta.precipitation_bin = precipitation_bin(w->second);
      ++joined;
    } else {
      t.meta.temperature_bin = kUnknownBin;
      t.meta.precipitation_bin = kUnknownBin;
    }
  }
  return joined;
}

DatasetSplit split_dataset(std::vector<Trajectory> trips, std::uint64_t seed) {
  if (trips.size() < 20) {
    throw std::invalid_argument("too few trips to split (need >= 20)");
  }
  Rng rng(seed);
  rng.shuffle(trips);

  const std::size_t n = trips.size();
  const auto n_train = static_cast<std::size_t>(
      std::llround(0.90 * static_cast<double>(n)));
  const auto n_val = static_cast<std::size_t>(
      std::llround(0.05 * static_cast<double>(n)));

  DatasetSplit split;
  split.train.assign(trips.begin(), trips.begin() + n_train);
  split.validation.assign(trips.begin() + n_train,
                          trips.begin() + n_train + n_val);
  split.test.assign(trips.begin() + n_train + n_val, trips.end());
  return split;
}

}  // namespace destpred
