#include "destpred/partition.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace destpred {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double coord(const GeoPoint& p, int axis) { return axis == 0 ? p.lat : p.lon; }

struct Builder {
  std::span<const GeoPoint> points;
  int n_ppr = 1;
  std::vector<SpacePartition::Node> nodes;
  std::vector<Region> regions;
  BBox bbox;

  // idx is the subset of point indices for this subtree; bounds are the
  // half-space constraints accumulated so far (half-open, lo <= c < hi).
  int build_node(std::vector<std::size_t>& idx, int depth, double lat_lo,
                 double lat_hi, double lon_lo, double lon_hi) {
    const std::size_t n = idx.size();
    if (static_cast<int>(n) > n_ppr) {
      // Attempts 0-1: exact-median split on the depth axis, then the other.
      // A pile of duplicates sitting on the axis minimum can defeat both
      // (median value = minimum, nothing strictly below). Attempts 2-3 peel
      // such a pile off by splitting just above the minimum instead.
      for (int attempt = 0; attempt < 4; ++attempt) {
        const int axis = (depth + attempt) % 2;
        double split;
        if (attempt < 2) {
          const std::size_t k = n / 2;
          std::nth_element(idx.begin(), idx.begin() + k, idx.end(),
                           [&](std::size_t a, std::size_t b) {
                             return coord(points[a], axis) <
                                    coord(points[b], axis);
                           });
          split = coord(points[idx[k]], axis);
        } else {
          double lo = std::numeric_limits<double>::infinity();
          for (std::size_t i : idx) lo = std::min(lo, coord(points[i], axis));
          double above = std::numeric_limits<double>::infinity();
          for (std::size_t i : idx) {
            const double c = coord(points[i], axis);
            if (c > lo) above = std::min(above, c);
          }
          if (!std::isfinite(above)) continue;  // axis is constant
          split = above;
        }
        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
          (coord(points[i], axis) < split ? left : right).push_back(i);
        }
        if (left.empty() || right.empty()) continue;

        const int node_index = static_cast<int>(nodes.size());
        nodes.push_back({axis, split, -1, -1, 0});
        int l, r;
        if (axis == 0) {
          l = build_node(left, depth + 1, lat_lo, split, lon_lo, lon_hi);
          r = build_node(right, depth + 1, split, lat_hi, lon_lo, lon_hi);
        } else {
          l = build_node(left, depth + 1, lat_lo, lat_hi, lon_lo, split);
          r = build_node(right, depth + 1, lat_lo, lat_hi, split, lon_hi);
        }
        nodes[node_index].left = l;
        nodes[node_index].right = r;
        return node_index;
      }
      // All points identical on both axes: fall through to a leaf.
    }

    Region reg;
    reg.id = static_cast<int>(regions.size()) + 1;
    reg.count = static_cast<int>(n);
    double lat_sum = 0.0, lon_sum = 0.0;
    for (std::size_t i : idx) {
      lat_sum += points[i].lat;
      lon_sum += points[i].lon;
    }
    reg.centroid = {lat_sum / static_cast<double>(n),
                    lon_sum / static_cast<double>(n)};
    reg.lat_lo = lat_lo;
    reg.lat_hi = lat_hi;
    reg.lon_lo = lon_lo;
    reg.lon_hi = lon_hi;
    reg.box = {std::max(lat_lo, bbox.lat_min), std::min(lat_hi, bbox.lat_max),
               std::max(lon_lo, bbox.lon_min), std::min(lon_hi, bbox.lon_max)};
    regions.push_back(reg);

    const int node_index = static_cast<int>(nodes.size());
    nodes.push_back({0, 0.0, -1, -1, reg.id});
    return node_index;
  }
};

}  // namespace

SpacePartition SpacePartition::build(std::span<const GeoPoint> points,
                                     const PartitionConfig& cfg) {
  if (points.empty()) throw std::invalid_argument("no points to partition");
  if (cfg.points_per_region_max < 1) {
    throw std::invalid_argument("points_per_region_max must be >= 1");
  }

  Builder b;
  b.points = points;
  b.n_ppr = cfg.points_per_region_max;
  b.bbox = {points[0].lat, points[0].lat, points[0].lon, points[0].lon};
  for (const auto& p : points) {
    b.bbox.lat_min = std::min(b.bbox.lat_min, p.lat);
    b.bbox.lat_max = std::max(b.bbox.lat_max, p.lat);
    b.bbox.lon_min = std::min(b.bbox.lon_min, p.lon);
    b.bbox.lon_max = std::max(b.bbox.lon_max, p.lon);
  }

  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  b.build_node(idx, 0, -kInf, kInf, -kInf, kInf);

  SpacePartition part;
  part.nodes_ = std::move(b.nodes);
  part.regions_ = std::move(b.regions);
  part.bbox_ = b.bbox;
  return part;
}

int SpacePartition::locate(const GeoPoint& p) const {
  int i = 0;
  while (true) {
    const Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.region > 0) return n.region;
    i = coord(p, n.axis) < n.split ? n.left : n.right;
  }
}

std::vector<int> SpacePartition::encode(
    std::span<const GeoPoint> points) const {
  if (points.empty()) throw std::invalid_argument("empty trajectory");
  std::vector<int> ids;
  ids.reserve(points.size());
  for (const auto& p : points) ids.push_back(locate(p));
  return ids;
}

std::vector<GeoPoint> SpacePartition::centroids() const {
  std::vector<GeoPoint> c;
  c.reserve(regions_.size());
  for (const auto& r : regions_) c.push_back(r.centroid);
  return c;
}

void SpacePartition::export_geojson(const std::string& path) const {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& r : regions_) {
    const auto& b = r.box;
    nlohmann::json ring = {{b.lon_min, b.lat_min}, {b.lon_max, b.lat_min},
                           {b.lon_max, b.lat_max}, {b.lon_min, b.lat_max},
                           {b.lon_min, b.lat_min}};
    nlohmann::json feature = {
        {"type", "Feature"},
        {"geometry",
         {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring})}}},
        {"properties",
         {{"region_id", r.id},
          {"count", r.count},
          {"centroid", {r.centroid.lon, r.centroid.lat}}}}};
    features.push_back(std::move(feature));
  }
  nlohmann::json fc = {{"type", "FeatureCollection"},
                       {"features", std::move(features)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << fc.dump(2) << '\n';
}

namespace {

nlohmann::json bound_to_json(double v) {
  if (std::isinf(v)) return nullptr;
  return v;
}

double bound_from_json(const nlohmann::json& j, double unbounded) {
  return j.is_null() ? unbounded : j.get<double>();
}

}  // namespace

void SpacePartition::save(const std::string& path) const {
  nlohmann::json j;
  j["format"] = "destpred-partition";
  j["version"] = 1;
  j["bbox"] = {bbox_.lat_min, bbox_.lat_max, bbox_.lon_min, bbox_.lon_max};
  auto nodes = nlohmann::json::array();
  for (const auto& n : nodes_) {
    nodes.push_back({{"axis", n.axis},
                     {"split", n.split},
                     {"left", n.left},
                     {"right", n.right},
                     {"region", n.region}});
  }
  j["nodes"] = std::move(nodes);
  auto regions = nlohmann::json::array();
  for (const auto& r : regions_) {
    regions.push_back(
        {{"id", r.id},
         {"centroid", {r.centroid.lat, r.centroid.lon}},
         {"count", r.count},
         {"box", {r.box.lat_min, r.box.lat_max, r.box.lon_min, r.box.lon_max}},
         {"bounds",
          {bound_to_json(r.lat_lo), bound_to_json(r.lat_hi),
           bound_to_json(r.lon_lo), bound_to_json(r.lon_hi)}}});
  }
  j["regions"] = std::move(regions);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump() << '\n';
}

SpacePartition SpacePartition::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "destpred-partition") {
    throw std::runtime_error(path + ": not a partition file");
  }
  SpacePartition part;
  const auto& bb = j.at("bbox");
  part.bbox_ = {bb.at(0), bb.at(1), bb.at(2), bb.at(3)};
  for (const auto& n : j.at("nodes")) {
    part.nodes_.push_back({n.at("axis"), n.at("split"), n.at("left"),
                           n.at("right"), n.at("region")});
  }
  for (const auto& r : j.at("regions")) {
    Region reg;
    reg.id = r.at("id");
    reg.centroid = {r.at("centroid").at(0), r.at("centroid").at(1)};
    reg.count = r.at("count");
    const auto& box = r.at("box");
    reg.box = {box.at(0), box.at(1), box.at(2), box.at(3)};
    const auto& bounds = r.at("bounds");
    reg.lat_lo = bound_from_json(bounds.at(0), -kInf);
    reg.lat_hi = bound_from_json(bounds.at(1), kInf);
    reg.lon_lo = bound_from_json(bounds.at(2), -kInf);
    reg.lon_hi = bound_from_json(bounds.at(3), kInf);
    part.regions_.push_back(reg);
  }
  if (part.nodes_.empty() || part.regions_.empty()) {
    throw std::runtime_error(path + ": empty partition");
  }
  return part;
}

}  // namespace destpred
