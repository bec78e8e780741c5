#include "destpred/routing.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace destpred {

void RoadGraph::add_node(int id, GeoPoint p) {
  nodes[id] = p;
  adjacency.try_emplace(id);
}

void RoadGraph::add_edge(int u, int v, double cost) {
  if (!nodes.count(u) || !nodes.count(v)) {
    throw std::invalid_argument("edge endpoint not a known node");
  }
  if (cost <= 0.0) throw std::invalid_argument("edge cost must be > 0");
  edges.push_back({u, v, cost});
  adjacency[u].push_back({v, cost});
  adjacency[v].push_back({u, cost});
}

void RoadGraph::finalize() {
  for (auto& [id, nbrs] : adjacency) {
    std::sort(nbrs.begin(), nbrs.end());
  }
}

RoadGraph load_graph(const std::string& nodes_path,
                     const std::string& edges_path, int* duplicate_warnings) {
  RoadGraph g;
  {
    std::ifstream in(nodes_path);
    if (!in) throw std::runtime_error("cannot open: " + nodes_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      int id;
      double lat, lon;
      if (!(ss >> id >> lat >> lon)) {
        throw std::runtime_error(nodes_path + ":" + std::to_string(lineno) +
                                 ": expected 'id lat lon'");
      }
      g.add_node(id, {lat, lon});
    }
  }
  if (g.nodes.empty()) throw std::runtime_error(nodes_path + ": no nodes");

  int duplicates = 0;
  {
    std::ifstream in(edges_path);
    if (!in) throw std::runtime_error("cannot open: " + edges_path);
    std::string line;
    std::size_t lineno = 0;
    std::map<std::pair<int, int>, std::size_t> seen;  // key -> edges index
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      int u, v;
      double cost;
      if (!(ss >> u >> v >> cost)) {
        throw std::runtime_error(edges_path + ":" + std::to_string(lineno) +
                                 ": expected 'u v cost'");
      }
      if (!g.nodes.count(u) || !g.nodes.count(v)) {
        throw std::runtime_error(edges_path + ":" + std::to_string(lineno) +
                                 ": dangling edge endpoint");
      }
      const auto key = std::minmax(u, v);
      auto it = seen.find(key);
      if (it != seen.end()) {
        ++duplicates;
        g.edges[it->second].cost = std::min(g.edges[it->second].cost, cost);
        continue;
      }
      if (cost <= 0.0) {
        throw std::runtime_error(edges_path + ":" + std::to_string(lineno) +
                                 ": edge cost must be > 0");
      }
      seen[key] = g.edges.size();
      g.edges.push_back({u, v, cost});
    }
  }
  // Rebuild adjacency from the deduplicated edge list.
  for (const auto& e : g.edges) {
    g.adjacency[e.u].push_back({e.v, e.cost});
    g.adjacency[e.v].push_back({e.u, e.cost});
  }
  g.finalize();
  if (duplicate_warnings) *duplicate_warnings = duplicates;
  return g;
}

void save_graph(const RoadGraph& g, const std::string& nodes_path,
                const std::string& edges_path) {
  std::ofstream nout(nodes_path);
  if (!nout) throw std::runtime_error("cannot open for writing: " + nodes_path);
  nout.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& [id, p] : g.nodes) {
    nout << id << ' ' << p.lat << ' ' << p.lon << '\n';
  }
  std::ofstream eout(edges_path);
  if (!eout) throw std::runtime_error("cannot open for writing: " + edges_path);
  eout.precision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : g.edges) {
    eout << e.u << ' ' << e.v << ' ' << e.cost << '\n';
  }
}

PathResult shortest_path(const RoadGraph& g, int src, int dst) {
  if (!g.nodes.count(src) || !g.nodes.count(dst)) {
    throw std::invalid_argument("unknown node id");
  }
  if (src == dst) return {{src}, 0.0};

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::map<int, double> dist;
  std::map<int, int> parent;
  using QueueItem = std::pair<double, int>;  // (distance, node)
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> pq;

  dist[src] = 0.0;
  pq.push({0.0, src});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    auto du = dist.find(u);
    if (du == dist.end() || d > du->second) continue;
    auto adj = g.adjacency.find(u);
    if (adj == g.adjacency.end()) continue;
    for (const auto& [v, cost] : adj->second) {
      const double nd = d + cost;
      auto dv = dist.find(v);
      const double cur = dv == dist.end() ? kInf : dv->second;
      if (nd < cur) {
        dist[v] = nd;
        parent[v] = u;
        pq.push({nd, v});
      } else if (nd == cur && u < parent[v]) {
        parent[v] = u;  // deterministic tie-break by predecessor id
      }
    }
  }

  auto it = dist.find(dst);
  if (it == dist.end()) throw std::runtime_error("no route");

  std::vector<int> path;
  for (int v = dst; v != src; v = parent.at(v)) path.push_back(v);
  path.push_back(src);
  std::reverse(path.begin(), path.end());
  return {std::move(path), it->second};
}

int nearest_node(const RoadGraph& g, const GeoPoint& p) {
  if (g.nodes.empty()) throw std::invalid_argument("empty graph");
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, q] : g.nodes) {
    const double d = haversine_m(p, q);
    if (d < best_d) {
      best_d = d;
      best = id;
    }
  }
  return best;
}

RoutePrediction predict_routes(const RoadGraph& g, const GeoPoint& last_pos,
                               std::span<const RouteTarget> targets) {
  if (targets.empty()) throw std::invalid_argument("no route targets");
  const int start = nearest_node(g, last_pos);

  RoutePrediction rp;
  for (const auto& t : targets) {
    const int dst = nearest_node(g, t.destination);
    PathResult path;
    try {
      path = shortest_path(g, start, dst);
    } catch (const std::runtime_error&) {
      ++rp.unreachable;
      continue;
    }
    for (std::size_t i = 1; i < path.nodes.size(); ++i) {
      const auto key = std::minmax(path.nodes[i - 1], path.nodes[i]);
      rp.edge_scores[key] += t.score;
    }
    rp.routes.push_back({t.region_id, t.score, std::move(path.nodes), path.cost});
  }
  if (rp.routes.empty()) {
    throw std::runtime_error("no route: all destinations unreachable");
  }
  return rp;
}

void export_routes_geojson(const RoadGraph& g, const RoutePrediction& rp,
                           const std::string& path) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& r : rp.routes) {
    nlohmann::json coords = nlohmann::json::array();
    for (int id : r.nodes) {
      const auto& p = g.nodes.at(id);
      coords.push_back({p.lon, p.lat});
    }
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
         {"properties", {{"region_id", r.region_id}, {"score", r.score}}}});
  }
  for (const auto& [key, score] : rp.edge_scores) {
    const auto& a = g.nodes.at(key.first);
    const auto& b = g.nodes.at(key.second);
    features.push_back(
        {{"type", "Feature"},
         {"geometry",
          {{"type", "LineString"},
           {"coordinates", {{a.lon, a.lat}, {b.lon, b.lat}}}}},
         {"properties", {{"merged_score", score}}}});
  }
  nlohmann::json fc = {{"type", "FeatureCollection"},
                       {"features", std::move(features)}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << fc.dump(2) << '\n';
}

}  // namespace destpred
