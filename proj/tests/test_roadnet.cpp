#include <gtest/gtest.h>

#include <random>

#include "greenwave/roadnet.hpp"
#include "support/oracles.hpp"

using namespace greenwave;
using namespace greenwave::roadnet;

namespace {

RoadGraph line_graph(int n, double length = 100.0, double speed = 10.0) {
  RoadGraph g;
  for (int i = 1; i <= n; ++i) g.add_node(NodeId{i}, 48.0 + i * 0.001, 11.0);
  for (int i = 1; i < n; ++i) g.add_edge(NodeId{i}, NodeId{i + 1}, length, speed);
  return g;
}

RoadGraph from_oracle(const oracle::RandomGraph& rg) {
  RoadGraph g;
  for (int i = 1; i <= rg.n_nodes; ++i) g.add_node(NodeId{i}, 48.0 + i * 0.001, 11.0 + (i % 3) * 0.001);
  for (std::size_t k = 0; k < rg.edges.size(); ++k) {
    g.add_edge(NodeId{rg.edges[k].from}, NodeId{rg.edges[k].to}, rg.lengths[k], rg.speeds[k]);
  }
  for (int h : rg.hospitals) g.add_hospital(NodeId{h}, "H" + std::to_string(h));
  return g;
}

std::vector<int> ids(const Route& r) {
  std::vector<int> out;
  for (NodeId n : r.node_sequence) out.push_back(static_cast<int>(n.value));
  return out;
}

}  // namespace

TEST(RoadGraph, RejectsInvalidEdges) {
  RoadGraph g = line_graph(3);
  EXPECT_FALSE(g.add_edge(NodeId{1}, NodeId{9}, 10, 10));
  EXPECT_FALSE(g.add_edge(NodeId{1}, NodeId{1}, 10, 10));
  EXPECT_FALSE(g.add_edge(NodeId{1}, NodeId{2}, 10, 10));
  EXPECT_FALSE(g.add_edge(NodeId{2}, NodeId{1}, 0, 10));
  EXPECT_FALSE(g.add_edge(NodeId{2}, NodeId{1}, 10, -1));
  EXPECT_FALSE(g.add_hospital(NodeId{7}, "nowhere"));
  EXPECT_FALSE(g.add_node(NodeId{1}, 0, 0));
}

TEST(ShortestPath, SourceEqualsDestination) {
  RoadGraph g = line_graph(3);
  const auto r = shortest_path(g, NodeId{2}, NodeId{2});
  ASSERT_TRUE(r);
  EXPECT_EQ(ids(*r), std::vector<int>{2});
  EXPECT_EQ(r->total_length_m, 0.0);
  EXPECT_EQ(r->total_time_s, 0.0);
}

TEST(ShortestPath, DiamondPrefersTimeMinimalArm) {
  // 1 -> 2 -> 4 is short but slow; 1 -> 3 -> 4 is long but fast.
  RoadGraph g;
  for (int i = 1; i <= 4; ++i) g.add_node(NodeId{i}, 48.0, 11.0 + i * 0.001);
  g.add_edge(NodeId{1}, NodeId{2}, 100, 2);   // 50 s
  g.add_edge(NodeId{2}, NodeId{4}, 100, 2);   // 50 s
  g.add_edge(NodeId{1}, NodeId{3}, 300, 15);  // 20 s
  g.add_edge(NodeId{3}, NodeId{4}, 300, 15);  // 20 s
  const auto r = shortest_path(g, NodeId{1}, NodeId{4});
  ASSERT_TRUE(r);
  EXPECT_EQ(ids(*r), (std::vector<int>{1, 3, 4}));
  const auto brute = oracle::brute_force_shortest(4, {{1, 2, 50}, {2, 4, 50}, {1, 3, 20}, {3, 4, 20}}, 1, 4);
  EXPECT_DOUBLE_EQ(r->total_time_s, brute.cost);
  EXPECT_DOUBLE_EQ(r->total_length_m, 600.0);
}

TEST(ShortestPath, UnreachableDestination) {
  RoadGraph g = line_graph(3);
  g.add_node(NodeId{4}, 48.1, 11.1);
  EXPECT_EQ(shortest_path(g, NodeId{1}, NodeId{4}).error(), RouteError::Unreachable);
  EXPECT_EQ(shortest_path(g, NodeId{3}, NodeId{1}).error(), RouteError::Unreachable);
}

TEST(ShortestPath, TieBreaksToLexicographicallySmallestSequence) {
  RoadGraph g;
  for (int i = 1; i <= 4; ++i) g.add_node(NodeId{i}, 48.0, 11.0 + i * 0.001);
  g.add_edge(NodeId{1}, NodeId{3}, 100, 10);
  g.add_edge(NodeId{3}, NodeId{4}, 100, 10);
  g.add_edge(NodeId{1}, NodeId{2}, 100, 10);
  g.add_edge(NodeId{2}, NodeId{4}, 100, 10);
  EXPECT_EQ(ids(*shortest_path(g, NodeId{1}, NodeId{4})), (std::vector<int>{1, 2, 4}));
}

TEST(ShortestPath, RouteOffsetsAreCumulative) {
  RoadGraph g;
  for (int i = 1; i <= 4; ++i) g.add_node(NodeId{i}, 48.0, 11.0 + i * 0.001);
  g.add_edge(NodeId{1}, NodeId{2}, 100, 10);  // 10 s
  g.add_edge(NodeId{2}, NodeId{3}, 150, 5);   // 30 s
  g.add_edge(NodeId{3}, NodeId{4}, 240, 12);  // 20 s
  const auto r = *shortest_path(g, NodeId{1}, NodeId{4});
  EXPECT_EQ(r.arrival_offsets_s, (std::vector<double>{0.0, 10.0, 40.0, 60.0}));
  EXPECT_EQ(r.distance_offsets_m, (std::vector<double>{0.0, 100.0, 250.0, 490.0}));
  EXPECT_DOUBLE_EQ(r.total_time_s, 60.0);
}

TEST(ShortestPath, MatchesBruteForceOnRandomGraphs) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const auto rg = oracle::random_graph(rng, 7, 0.35);
    const RoadGraph g = from_oracle(rg);
    for (int s = 1; s <= rg.n_nodes; ++s) {
      for (int d = 1; d <= rg.n_nodes; ++d) {
        const auto brute = oracle::brute_force_shortest(rg.n_nodes, rg.edges, s, d);
        const auto r = shortest_path(g, NodeId{s}, NodeId{d});
        if (brute.path.empty()) {
          EXPECT_FALSE(r);
          continue;
        }
        ASSERT_TRUE(r);
        EXPECT_EQ(r->total_time_s, brute.cost);
        EXPECT_EQ(ids(*r), brute.path);
      }
    }
  }
}

TEST(ShortestPath, TriangleInequalityAndDeterminism) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const RoadGraph g = from_oracle(oracle::random_graph(rng, 8, 0.4));
    const auto n = static_cast<int>(g.nodes().size());
    for (int s = 1; s <= n; ++s) {
      for (int d = 1; d <= n; ++d) {
        const auto sd = shortest_path(g, NodeId{s}, NodeId{d});
        if (!sd) continue;
        EXPECT_EQ(ids(*sd), ids(*shortest_path(g, NodeId{s}, NodeId{d})));
        for (int k = 1; k <= n; ++k) {
          const auto sk = shortest_path(g, NodeId{s}, NodeId{k});
          const auto kd = shortest_path(g, NodeId{k}, NodeId{d});
          if (sk && kd) {
            EXPECT_LE(sd->total_time_s, sk->total_time_s + kd->total_time_s + 1e-9);
          }
        }
      }
    }
  }
}

TEST(NearestHospital, SingleHospital) {
  RoadGraph g = line_graph(4);
  g.add_hospital(NodeId{4}, "H");
  const auto h = nearest_hospital(g, NodeId{1});
  ASSERT_TRUE(h);
  EXPECT_EQ(h->hospital, NodeId{4});
}

TEST(NearestHospital, PicksFasterOfTwo) {
  // Hospital 2 at 100 s, hospital 3 at 90 s.
  RoadGraph g;
  for (int i = 1; i <= 3; ++i) g.add_node(NodeId{i}, 48.0, 11.0 + i * 0.001);
  g.add_edge(NodeId{1}, NodeId{2}, 1000, 10);
  g.add_edge(NodeId{1}, NodeId{3}, 900, 10);
  g.add_hospital(NodeId{2}, "B");
  g.add_hospital(NodeId{3}, "C");
  const auto h = nearest_hospital(g, NodeId{1});
  ASSERT_TRUE(h);
  EXPECT_EQ(h->hospital, NodeId{3});
  EXPECT_DOUBLE_EQ(h->route.total_time_s, 90.0);
}

TEST(NearestHospital, TieGoesToSmallerId) {
  RoadGraph g;
  for (int i = 1; i <= 3; ++i) g.add_node(NodeId{i}, 48.0, 11.0 + i * 0.001);
  g.add_edge(NodeId{1}, NodeId{3}, 100, 10);
  g.add_edge(NodeId{1}, NodeId{2}, 100, 10);
  g.add_hospital(NodeId{3}, "C");
  g.add_hospital(NodeId{2}, "B");
  EXPECT_EQ(nearest_hospital(g, NodeId{1})->hospital, NodeId{2});
}

TEST(NearestHospital, Errors) {
  RoadGraph g = line_graph(3);
  EXPECT_EQ(nearest_hospital(g, NodeId{1}).error(), RouteError::NoHospital);
  g.add_hospital(NodeId{1}, "behind");
  EXPECT_EQ(nearest_hospital(g, NodeId{3}).error(), RouteError::AllUnreachable);
}

TEST(NearestHospital, EqualsMinimumOverHospitalsOnRandomGraphs) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto rg = oracle::random_graph(rng, 8, 0.3);
    const RoadGraph g = from_oracle(rg);
    for (int s = 1; s <= rg.n_nodes; ++s) {
      std::optional<std::pair<double, int>> best;
      for (int h : rg.hospitals) {
        const auto b = oracle::brute_force_shortest(rg.n_nodes, rg.edges, s, h);
        if (b.path.empty()) continue;
        if (!best || b.cost < best->first) best = std::pair{b.cost, h};
      }
      const auto got = nearest_hospital(g, NodeId{s});
      if (!best) {
        EXPECT_EQ(got.error(), RouteError::AllUnreachable);
        continue;
      }
      ASSERT_TRUE(got);
      EXPECT_EQ(got->hospital, NodeId{best->second});
      EXPECT_EQ(got->route.total_time_s, best->first);
    }
  }
}

TEST(Haversine, AgreesWithIndependentFormula) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> lat(-80, 80), lon(-179, 179), d(-0.5, 0.5);
  for (int i = 0; i < 2000; ++i) {
    const double a = lat(rng), b = lon(rng);
    const double c = a + d(rng), e = b + d(rng);
    EXPECT_NEAR(haversine_m(a, b, c, e), oracle::great_circle_m(a, b, c, e), 1e-6);
  }
}

TEST(MapMatch, ExactNodeAndThousandMetres) {
  RoadGraph g;
  const double north = oracle::lat_north_of(48.0, 1000.0);
  g.add_node(NodeId{1}, 48.0, 11.0);
  g.add_node(NodeId{2}, north, 11.0);
  ASSERT_NEAR(oracle::great_circle_m(48.0, 11.0, north, 11.0), 1000.0, 1e-6);
  const auto m = map_match(g, 48.0, 11.0);
  EXPECT_EQ(m.node, NodeId{1});
  EXPECT_EQ(m.distance_m, 0.0);

  RoadGraph only_far;
  only_far.add_node(NodeId{2}, north, 11.0);
  EXPECT_NEAR(map_match(only_far, 48.0, 11.0).distance_m, 1000.0, 1.0);
}

TEST(MapMatch, EquidistantGoesToSmallerId) {
  RoadGraph g;
  g.add_node(NodeId{9}, 48.001, 11.0);
  g.add_node(NodeId{4}, 47.999, 11.0);
  g.add_node(NodeId{7}, 48.5, 11.0);
  EXPECT_EQ(map_match(g, 48.0, 11.0).node, NodeId{4});
}

TEST(MapMatch, ZeroDistanceOnlyAtNodes) {
  RoadGraph g = line_graph(5);
  for (const auto& [id, n] : g.nodes()) EXPECT_EQ(map_match(g, n.latitude, n.longitude).distance_m, 0.0);
  EXPECT_GT(map_match(g, 48.0015, 11.0).distance_m, 0.0);
}

TEST(RouteIntersections, NoneThreeAndOffsets) {
  RoadGraph g = line_graph(5, 120.0, 12.0);  // 10 s per edge
  const Route r = *shortest_path(g, NodeId{1}, NodeId{5});
  EXPECT_TRUE(route_intersections(g, r).empty());

  g.add_intersection(NodeId{1}, "C1");  // origin, excluded
  g.add_intersection(NodeId{2}, "C2");
  g.add_intersection(NodeId{4}, "C4");
  g.add_intersection(NodeId{5}, "C5");
  const auto sigs = route_intersections(g, r);
  ASSERT_EQ(sigs.size(), 3u);
  EXPECT_EQ(sigs[0].node, NodeId{2});
  EXPECT_EQ(sigs[1].node, NodeId{4});
  EXPECT_EQ(sigs[2].node, NodeId{5});
  EXPECT_EQ(sigs[0].controller, "C2");
  EXPECT_EQ(sigs[1].approach, ApproachId{3});
  EXPECT_EQ(g.edge(sigs[1].approach_edge).to, NodeId{4});
  EXPECT_DOUBLE_EQ(sigs[0].arrival_offset_s, 10.0);
  EXPECT_DOUBLE_EQ(sigs[1].arrival_offset_s, 30.0);
  EXPECT_DOUBLE_EQ(sigs[2].arrival_offset_s, 40.0);
}

TEST(ProjectOnRoute, MidEdgeAndEndpoints) {
  RoadGraph g;
  g.add_node(NodeId{1}, 48.0, 11.0);
  g.add_node(NodeId{2}, oracle::lat_north_of(48.0, 200.0), 11.0);
  g.add_node(NodeId{3}, oracle::lat_north_of(48.0, 400.0), 11.0);
  g.add_edge(NodeId{1}, NodeId{2}, 200, 10);
  g.add_edge(NodeId{2}, NodeId{3}, 200, 20);
  const Route r = *shortest_path(g, NodeId{1}, NodeId{3});
  const auto start = project_on_route(g, r, 48.0, 11.0);
  ASSERT_TRUE(start);
  EXPECT_NEAR(start->offset_m, 0.0, 1e-6);
  const auto mid = project_on_route(g, r, oracle::lat_north_of(48.0, 300.0), 11.0);
  ASSERT_TRUE(mid);
  EXPECT_EQ(mid->edge_index, 1u);
  EXPECT_NEAR(mid->offset_m, 300.0, 0.01);
  EXPECT_NEAR(mid->offset_s, 25.0, 0.001);
  EXPECT_NEAR(mid->off_route_m, 0.0, 0.01);
}
