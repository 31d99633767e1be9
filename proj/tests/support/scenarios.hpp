#pragma once

#include <string>

#include "greenwave/sim.hpp"

namespace scenarios {

using namespace greenwave;

/// 1 -> 2 -> 3 due north, signal "TL-2" at node 2, hospital at node 3.
/// Approach 1 (from node 1) is served by phase 1, after a phase 0 for approach 3.
struct LineOptions {
  double first_edge_m = 940.0;
  double second_edge_m = 600.0;
  double speed_mps = 10.0;
  bool signalized = true;
  Duration phase0_green{100000};
  Duration phase1_green{30000};
  Duration offset{0};
  int queue = 0;
  sim::SimMode mode = sim::SimMode::Baseline;
  Duration dt{100};
};

inline constexpr double kMetresPerDegree = 6371000.0 * 3.14159265358979323846 / 180.0;

inline sim::Scenario line(const LineOptions& o = {}) {
  sim::Scenario sc;
  sc.name = "line";
  auto& g = sc.graph;
  g.add_node(NodeId{1}, 48.0, 11.5);
  g.add_node(NodeId{2}, 48.0 + o.first_edge_m / kMetresPerDegree, 11.5);
  g.add_node(NodeId{3}, 48.0 + (o.first_edge_m + o.second_edge_m) / kMetresPerDegree, 11.5);
  g.add_edge(NodeId{1}, NodeId{2}, o.first_edge_m, o.speed_mps);
  g.add_edge(NodeId{2}, NodeId{1}, o.first_edge_m, o.speed_mps);
  g.add_edge(NodeId{2}, NodeId{3}, o.second_edge_m, o.speed_mps);
  g.add_edge(NodeId{3}, NodeId{2}, o.second_edge_m, o.speed_mps);
  g.add_hospital(NodeId{3}, "Hospital");
  if (o.signalized) {
    g.add_intersection(NodeId{2}, "TL-2");
    signals::PhasePlan plan;
    plan.phases.push_back(signals::Phase{{ApproachId{3}}, o.phase0_green});
    plan.phases.push_back(signals::Phase{{ApproachId{1}}, o.phase1_green});
    plan.derive_conflicts();
    sc.signals.push_back(sim::SignalSpec{NodeId{2}, "TL-2", plan, o.offset});
    if (o.queue > 0) sc.sim.initial_queues.push_back(sim::QueueSpec{NodeId{2}, ApproachId{1}, o.queue});
  }
  sc.ambulances.push_back(sim::AmbulanceSpec{"A-1", NodeId{1}, std::nullopt, Duration{0}, sim::default_device_number(0)});
  sc.sim.mode = o.mode;
  sc.sim.dt = o.dt;
  sc.sim.horizon = Duration{600000};
  return sc;
}

}  // namespace scenarios
