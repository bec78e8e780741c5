#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "destpred/geo.hpp"

namespace destpred {

// Undirected road network. Node ids are arbitrary non-negative integers;
// adjacency is kept sorted so traversals are deterministic.
struct RoadGraph {
  std::map<int, GeoPoint> nodes;

  struct Edge {
    int u = 0;
    int v = 0;
    double cost = 0.0;  // > 0, travel seconds or meters
  };
  std::vector<Edge> edges;

  // node id -> sorted (neighbor id, cost)
  std::map<int, std::vector<std::pair<int, double>>> adjacency;

  void add_node(int id, GeoPoint p);
  // Duplicate edges keep the minimum cost. Throws on dangling endpoints.
  void add_edge(int u, int v, double cost);
  void finalize();  // sorts adjacency; call after bulk inserts
};

// Node file lines "id lat lon", edge file lines "u v cost". A dangling edge
// endpoint raises an error naming the offending line; duplicate edges keep
// the minimum cost and are counted in *duplicate_warnings.
RoadGraph load_graph(const std::string& nodes_path,
                     const std::string& edges_path,
                     int* duplicate_warnings = nullptr);
void save_graph(const RoadGraph& g, const std::string& nodes_path,
                const std::string& edges_path);

struct PathResult {
  std::vector<int> nodes;  // src..dst inclusive; single node when src == dst
  double cost = 0.0;
};

// Dijkstra with deterministic tie-breaking: equal-cost relaxations prefer the
// smaller predecessor id. Throws std::runtime_error("no route") when dst is
// unreachable.
PathResult shortest_path(const RoadGraph& g, int src, int dst);

int nearest_node(const RoadGraph& g, const GeoPoint& p);

struct RouteTarget {
  int region_id = 0;
  double score = 0.0;
  GeoPoint destination;
};

struct RoutePrediction {
  struct Route {
    int region_id = 0;
    double score = 0.0;
    std::vector<int> nodes;
    double cost = 0.0;
  };
  std::vector<Route> routes;
  // canonical (min id, max id) edge key -> sum of scores of routes using it
  std::map<std::pair<int, int>, double> edge_scores;
  int unreachable = 0;
};

// Routes from the node nearest last_pos to the node nearest each target
// destination; each route carries its destination score and overlapping
// edges accumulate the sum of their routes' scores. Unreachable targets are
// skipped and counted; all-unreachable raises an error.
RoutePrediction predict_routes(const RoadGraph& g, const GeoPoint& last_pos,
                               std::span<const RouteTarget> targets);

// Routes as LineString features with {region_id, score}; merged edges as
// LineString features with {merged_score}.
void export_routes_geojson(const RoadGraph& g, const RoutePrediction& rp,
                           const std::string& path);

}  // namespace destpred
