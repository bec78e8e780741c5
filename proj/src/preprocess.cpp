#include "destpred/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "destpred/geo.hpp"

namespace destpred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Implied speed in km/h between consecutive samples; a zero time delta with
// nonzero displacement counts as infinite.
double segment_speed_kmh(const Trajectory& t, std::size_t i) {
  const double d = haversine_m(t.points[i], t.points[i + 1]);
  const double dt = static_cast<double>(t.timestamps[i + 1] - t.timestamps[i]);
  if (dt <= 0.0) return d > 0.0 ? kInf : 0.0;
  return d / dt * 3.6;
}

}  // namespace

std::vector<Trajectory> filter_duration(std::vector<Trajectory> trips,
                                        const PreprocessConfig& cfg) {
  std::erase_if(trips, [&](const Trajectory& t) {
    if (t.size() <= 1) return true;
    const double dur = t.duration_s();
    return dur < cfg.min_duration_s || dur > cfg.max_duration_s;
  });
  return trips;
}

int count_speed_violations(const Trajectory& trip, double speed_limit_kmh) {
  int violations = 0;
  for (std::size_t i = 0; i + 1 < trip.size(); ++i) {
    if (segment_speed_kmh(trip, i) > speed_limit_kmh) ++violations;
  }
  return violations;
}

Trajectory smooth_speed_outliers(Trajectory trip,
                                 const PreprocessConfig& cfg) {
  if (trip.size() < 2) return trip;

  for (int pass = 0; pass < 2; ++pass) {
    const std::size_t n = trip.size();
    std::vector<bool> offending(n, false);
    bool any = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (segment_speed_kmh(trip, i) > cfg.speed_limit_kmh) {
        offending[i] = offending[i + 1] = true;
        any = true;
      }
    }
    if (!any) break;

    // Replace every offending point simultaneously from the pre-pass
    // coordinates.
    std::vector<GeoPoint> smoothed = trip.points;
    auto median3 = [](double a, double b, double c) {
      return std::max(std::min(a, b), std::min(std::max(a, b), c));
    };
    for (std::size_t i = 0; i < n; ++i) {
      if (!offending[i]) continue;
      const auto& p = trip.points;
      if (i == 0) {
        smoothed[i] = {(p[0].lat + p[1].lat) / 2.0,
                       (p[0].lon + p[1].lon) / 2.0};
      } else if (i + 1 == n) {
        smoothed[i] = {(p[n - 2].lat + p[n - 1].lat) / 2.0,
                       (p[n - 2].lon + p[n - 1].lon) / 2.0};
      } else {
        smoothed[i] = {median3(p[i - 1].lat, p[i].lat, p[i + 1].lat),
                       median3(p[i - 1].lon, p[i].lon, p[i + 1].lon)};
      }
    }
    trip.points = std::move(smoothed);
  }
  return trip;
}

std::vector<Trajectory> filter_bbox(std::vector<Trajectory> trips,
                                    const PreprocessConfig& cfg) {
  std::erase_if(trips, [&](const Trajectory& t) {
    return std::any_of(t.points.begin(), t.points.end(), [&](const GeoPoint& p) {
      return !cfg.bbox.contains(p);
    });
  });
  return trips;
}

double roundtrip_factor(const Trajectory& trip) {
  if (trip.size() < 2) {
    throw std::invalid_argument("roundtrip factor needs >= 2 points");
  }
  const double beeline = haversine_m(trip.points.front(), trip.points.back());
  if (beeline == 0.0) return kInf;
  return path_length_m(trip.points) / beeline;
}

double tau_percentile_threshold(const std::vector<double>& taus,
                                int percentile) {
  std::vector<double> finite;
  finite.reserve(taus.size());
  for (double t : taus) {
    if (std::isfinite(t)) finite.push_back(t);
  }
  if (finite.empty()) {
    throw std::invalid_argument("no finite roundtrip factors");
  }
  std::sort(finite.begin(), finite.end());
  const auto n = static_cast<double>(finite.size());
  auto rank = static_cast<std::size_t>(
      std::ceil(static_cast<double>(percentile) / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, finite.size());
  return finite[rank - 1];
}

std::string PipelineReport::to_csv() const {
  std::ostringstream out;
  out << "step,kept_count,kept_percent\n";
  out.precision(4);
  out << std::fixed;
  for (const auto& row : rows) {
    out << row.step << ',' << row.kept << ',' << row.kept_percent << '\n';
  }
  return out.str();
}

std::pair<std::vector<Trajectory>, PipelineReport> run_pipeline(
    std::vector<Trajectory> trips, const PreprocessConfig& cfg) {
  PipelineReport report;
  const auto total = static_cast<double>(trips.size());
  auto add_row = [&](const std::string& step, std::size_t kept) {
    report.rows.push_back(
        {step, kept, total > 0.0 ? 100.0 * static_cast<double>(kept) / total
                                 : 0.0});
  };
  add_row("-", trips.size());

  trips = filter_duration(std::move(trips), cfg);
  add_row("(1)", trips.size());

  for (auto& t : trips) t = smooth_speed_outliers(std::move(t), cfg);
  add_row("(2)", trips.size());

  trips = filter_bbox(std::move(trips), cfg);
  add_row("(3)", trips.size());

  std::vector<double> taus;
  taus.reserve(trips.size());
  for (const auto& t : trips) taus.push_back(roundtrip_factor(t));

  double threshold = cfg.tau.fixed;
  if (cfg.tau.percentile > 0) {
    threshold = tau_percentile_threshold(taus, cfg.tau.percentile);
  }
  if (threshold <= 1.0) {
    throw std::invalid_argument("tau threshold must be > 1");
  }
  report.tau_threshold = threshold;

  std::vector<Trajectory> kept;
  kept.reserve(trips.size());
  for (std::size_t i = 0; i < trips.size(); ++i) {
    if (taus[i] <= threshold) kept.push_back(std::move(trips[i]));
  }
  add_row("(4)", kept.size());
  return {std::move(kept), std::move(report)};
}

}  // namespace destpred
