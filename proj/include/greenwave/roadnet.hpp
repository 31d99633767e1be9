#pragma once

// Road graph, hospital registry, routing and map matching.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "greenwave/expected.hpp"

namespace greenwave {

template <class Tag, class Rep>
struct StrongId {
  Rep value{};
  friend auto operator<=>(const StrongId&, const StrongId&) = default;
};

using NodeId = StrongId<struct NodeTag, std::int64_t>;
using EdgeId = StrongId<struct EdgeTag, std::int64_t>;
/// Signal approaches are labelled by the upstream node of the entering edge.
using ApproachId = StrongId<struct ApproachTag, std::int64_t>;
using ControllerId = std::string;

inline constexpr double kEarthRadiusM = 6371000.0;

inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = 3.14159265358979323846 / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

namespace roadnet {

struct Node {
  NodeId id;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct Edge {
  EdgeId id;
  NodeId from;
  NodeId to;
  double length_m = 0.0;
  double speed_mps = 0.0;

  double travel_time_s() const { return length_m / speed_mps; }
};

enum class RouteError { Unreachable, NoHospital, AllUnreachable, UnknownNode };

inline const char* to_string(RouteError e) {
  switch (e) {
    case RouteError::Unreachable: return "Unreachable";
    case RouteError::NoHospital: return "NoHospital";
    case RouteError::AllUnreachable: return "AllUnreachable";
    case RouteError::UnknownNode: return "UnknownNode";
  }
  return "?";
}

/// Immutable once built; concurrent readers need no locking.
class RoadGraph {
 public:
  /// Returns false if the id is already present.
  bool add_node(NodeId id, double latitude, double longitude) {
    if (nodes_.count(id)) return false;
    nodes_.emplace(id, Node{id, latitude, longitude});
    out_.emplace(id, std::vector<EdgeId>{});
    in_.emplace(id, std::vector<EdgeId>{});
    return true;
  }

  /// Returns the edge id, or nullopt for unknown endpoints, self loops,
  /// duplicate (from, to) pairs or non-positive length/speed.
  std::optional<EdgeId> add_edge(NodeId from, NodeId to, double length_m, double speed_mps) {
    if (!nodes_.count(from) || !nodes_.count(to) || from == to) return std::nullopt;
    if (!(length_m > 0.0) || !(speed_mps > 0.0)) return std::nullopt;
    if (find_edge(from, to)) return std::nullopt;
    const EdgeId id{static_cast<std::int64_t>(edges_.size())};
    edges_.push_back(Edge{id, from, to, length_m, speed_mps});
    out_[from].push_back(id);
    in_[to].push_back(id);
    return id;
  }

  bool add_hospital(NodeId node, std::string name) {
    if (!nodes_.count(node) || hospitals_.count(node)) return false;
    hospitals_.emplace(node, std::move(name));
    return true;
  }

  bool add_intersection(NodeId node, ControllerId controller) {
    if (!nodes_.count(node) || intersections_.count(node)) return false;
    intersections_.emplace(node, std::move(controller));
    return true;
  }

  bool has_node(NodeId id) const { return nodes_.count(id) != 0; }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  const std::map<NodeId, Node>& nodes() const { return nodes_; }
  const Edge& edge(EdgeId id) const { return edges_.at(static_cast<std::size_t>(id.value)); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<EdgeId>& out_edges(NodeId id) const { return out_.at(id); }
  const std::vector<EdgeId>& in_edges(NodeId id) const { return in_.at(id); }
  const std::map<NodeId, std::string>& hospitals() const { return hospitals_; }
  const std::map<NodeId, ControllerId>& intersections() const { return intersections_; }

  std::optional<ControllerId> controller_at(NodeId id) const {
    auto it = intersections_.find(id);
    if (it == intersections_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<EdgeId> find_edge(NodeId from, NodeId to) const {
    auto it = out_.find(from);
    if (it == out_.end()) return std::nullopt;
    for (EdgeId e : it->second) {
      if (edges_[static_cast<std::size_t>(e.value)].to == to) return e;
    }
    return std::nullopt;
  }

 private:
  std::map<NodeId, Node> nodes_;
  std::vector<Edge> edges_;
  std::map<NodeId, std::vector<EdgeId>> out_;
  std::map<NodeId, std::vector<EdgeId>> in_;
  std::map<NodeId, std::string> hospitals_;
  std::map<NodeId, ControllerId> intersections_;
};

inline ApproachId approach_of(const Edge& e) { return ApproachId{e.from.value}; }

struct Route {
  std::vector<NodeId> node_sequence;
  std::vector<EdgeId> edges;
  double total_length_m = 0.0;
  double total_time_s = 0.0;
  std::vector<double> arrival_offsets_s;  // free-flow, first entry 0
  std::vector<double> distance_offsets_m;

  NodeId origin() const { return node_sequence.front(); }
  NodeId destination() const { return node_sequence.back(); }
};

/// Builds a Route from a node path; nullopt if consecutive nodes are not joined.
inline std::optional<Route> route_from_nodes(const RoadGraph& g, const std::vector<NodeId>& path) {
  if (path.empty() || !g.has_node(path.front())) return std::nullopt;
  Route r;
  r.node_sequence = path;
  r.arrival_offsets_s.push_back(0.0);
  r.distance_offsets_m.push_back(0.0);
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    auto e = g.find_edge(path[i], path[i + 1]);
    if (!e) return std::nullopt;
    const Edge& edge = g.edge(*e);
    r.edges.push_back(*e);
    r.total_time_s += edge.travel_time_s();
    r.total_length_m += edge.length_m;
    r.arrival_offsets_s.push_back(r.total_time_s);
    r.distance_offsets_m.push_back(r.total_length_m);
  }
  return r;
}

/// Minimum travel-time path. Equal-cost paths are ordered by their node
/// sequence, lexicographically, so the answer is unique.
inline Expected<Route, RouteError> shortest_path(const RoadGraph& g, NodeId src, NodeId dst) {
  if (!g.has_node(src) || !g.has_node(dst)) return unexpected(RouteError::UnknownNode);

  struct Label {
    double cost;
    std::vector<NodeId> path;
    bool operator>(const Label& o) const {
      if (cost != o.cost) return cost > o.cost;
      return path > o.path;
    }
  };
  // With positive weights, the (cost, path) order is preserved by extending two
  // labels that end at the same node, so label-setting Dijkstra stays exact.
  std::map<NodeId, Label> best;
  std::priority_queue<Label, std::vector<Label>, std::greater<>> open;
  best[src] = Label{0.0, {src}};
  open.push(best[src]);
  std::map<NodeId, bool> settled;
  while (!open.empty()) {
    Label cur = open.top();
    open.pop();
    const NodeId u = cur.path.back();
    if (settled[u]) continue;
    settled[u] = true;
    if (u == dst) break;
    for (EdgeId eid : g.out_edges(u)) {
      const Edge& e = g.edge(eid);
      if (settled[e.to]) continue;
      Label next{cur.cost + e.travel_time_s(), cur.path};
      next.path.push_back(e.to);
      auto it = best.find(e.to);
      if (it == best.end() || it->second > next) {
        best[e.to] = next;
        open.push(std::move(next));
      }
    }
  }
  auto it = best.find(dst);
  if (it == best.end()) return unexpected(RouteError::Unreachable);
  return *route_from_nodes(g, it->second.path);
}

struct HospitalRoute {
  NodeId hospital;
  Route route;
};

/// Hospital with the smallest shortest-path travel time; ties to the smaller node id.
inline Expected<HospitalRoute, RouteError> nearest_hospital(const RoadGraph& g, NodeId from) {
  if (g.hospitals().empty()) return unexpected(RouteError::NoHospital);
  std::optional<HospitalRoute> best;
  for (const auto& [node, name] : g.hospitals()) {
    auto r = shortest_path(g, from, node);
    if (!r) continue;
    if (!best || r->total_time_s < best->route.total_time_s) {
      best = HospitalRoute{node, std::move(*r)};
    }
  }
  if (!best) return unexpected(RouteError::AllUnreachable);
  return *best;
}

struct MapMatch {
  NodeId node;
  double distance_m = 0.0;
};

/// Nearest node by great-circle distance; ties to the smaller node id.
inline MapMatch map_match(const RoadGraph& g, double latitude, double longitude) {
  MapMatch best{NodeId{}, std::numeric_limits<double>::infinity()};
  for (const auto& [id, n] : g.nodes()) {
    const double d = haversine_m(latitude, longitude, n.latitude, n.longitude);
    if (d < best.distance_m) best = MapMatch{id, d};
  }
  return best;
}

struct RouteSignal {
  NodeId node;
  ControllerId controller;
  EdgeId approach_edge;
  ApproachId approach;
  std::size_t route_index = 0;
  double arrival_offset_s = 0.0;
};

/// Signalized nodes along the route after the origin, in traversal order.
inline std::vector<RouteSignal> route_intersections(const RoadGraph& g, const Route& r) {
  std::vector<RouteSignal> out;
  for (std::size_t i = 1; i < r.node_sequence.size(); ++i) {
    auto c = g.controller_at(r.node_sequence[i]);
    if (!c) continue;
    const Edge& e = g.edge(r.edges[i - 1]);
    out.push_back(RouteSignal{r.node_sequence[i], *c, e.id, approach_of(e), i, r.arrival_offsets_s[i]});
  }
  return out;
}

/// Continuous position along a route.
struct RouteProgress {
  std::size_t edge_index = 0;  // route.edges index the position lies on
  double fraction = 0.0;       // along that edge, [0, 1]
  double offset_s = 0.0;       // free-flow time from the route origin
  double offset_m = 0.0;
  double off_route_m = 0.0;    // distance from the fix to the route polyline
};

/// Projects a position onto the route edges from `min_edge` onward, using a
/// local equirectangular plane per edge. Ties resolve to the earlier edge.
inline std::optional<RouteProgress> project_on_route(const RoadGraph& g, const Route& r, double latitude,
                                                     double longitude, std::size_t min_edge = 0) {
  if (r.edges.empty()) return std::nullopt;
  constexpr double rad = 3.14159265358979323846 / 180.0;
  std::optional<RouteProgress> best;
  for (std::size_t i = std::min(min_edge, r.edges.size() - 1); i < r.edges.size(); ++i) {
    const Edge& e = g.edge(r.edges[i]);
    const Node& a = g.node(e.from);
    const Node& b = g.node(e.to);
    const double k = std::cos(a.latitude * rad) * kEarthRadiusM * rad;
    const double bx = (b.longitude - a.longitude) * k;
    const double by = (b.latitude - a.latitude) * kEarthRadiusM * rad;
    const double px = (longitude - a.longitude) * k;
    const double py = (latitude - a.latitude) * kEarthRadiusM * rad;
    const double len2 = bx * bx + by * by;
    double t = len2 > 0 ? (px * bx + py * by) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = px - t * bx;
    const double dy = py - t * by;
    const double dist = std::sqrt(dx * dx + dy * dy);
    if (!best || dist < best->off_route_m - 1e-9) {
      RouteProgress p;
      p.edge_index = i;
      p.fraction = t;
      p.offset_s = r.arrival_offsets_s[i] + t * (r.arrival_offsets_s[i + 1] - r.arrival_offsets_s[i]);
      p.offset_m = r.distance_offsets_m[i] + t * (r.distance_offsets_m[i + 1] - r.distance_offsets_m[i]);
      p.off_route_m = dist;
      best = p;
    }
  }
  return best;
}

}  // namespace roadnet
}  // namespace greenwave
