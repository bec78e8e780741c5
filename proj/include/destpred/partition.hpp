#pragma once

#include <span>
#include <string>
#include <vector>

#include "destpred/geo.hpp"

namespace destpred {

struct PartitionConfig {
  int points_per_region_max = 1;  // n_ppr
};

struct Region {
  int id = 0;           // 1..n_r, contiguous
  GeoPoint centroid;    // mean of the training points assigned to this leaf
  int count = 0;        // training points contained
  BBox box;             // half-space box clipped to the data bbox

  // Half-open half-space bounds accumulated root-to-leaf; outer edges are
  // +/-infinity. Membership is lo <= coord < hi on both axes.
  double lat_lo = 0.0, lat_hi = 0.0, lon_lo = 0.0, lon_hi = 0.0;

  bool half_space_contains(const GeoPoint& p) const {
    return p.lat >= lat_lo && p.lat < lat_hi && p.lon >= lon_lo &&
           p.lon < lon_hi;
  }
};

// k-d tree over (lat, lon) splitting at the median along alternating axes
// until every leaf holds at most n_ppr points. Leaves tile the whole plane:
// points on a split value fall into the right/upper half-space.
class SpacePartition {
 public:
  struct Node {
    int axis = 0;       // 0 = lat, 1 = lon
    double split = 0.0;
    int left = -1;      // child node indices; -1 on leaves
    int right = -1;
    int region = 0;     // region id when leaf, 0 otherwise
  };

  static SpacePartition build(std::span<const GeoPoint> points,
                              const PartitionConfig& cfg);

  // Region id (1-based) of the unique leaf whose half-space chain contains p.
  // Total over the plane.
  int locate(const GeoPoint& p) const;

  // Element-wise locate, length preserved. Throws on an empty sequence.
  std::vector<int> encode(std::span<const GeoPoint> points) const;

  int region_count() const { return static_cast<int>(regions_.size()); }
  const std::vector<Region>& regions() const { return regions_; }
  const Region& region(int id) const { return regions_.at(id - 1); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const BBox& data_bbox() const { return bbox_; }

  std::vector<GeoPoint> centroids() const;  // index i holds region id i+1

  // GeoJSON FeatureCollection of leaf boxes clipped to the data bbox, with
  // region_id / count / centroid ([lon, lat]) properties.
  void export_geojson(const std::string& path) const;

  void save(const std::string& path) const;
  static SpacePartition load(const std::string& path);

 private:
  std::vector<Node> nodes_;
  std::vector<Region> regions_;
  BBox bbox_;
};

}  // namespace destpred
