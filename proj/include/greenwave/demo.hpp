#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "greenwave/sim.hpp"

namespace greenwave::demo {

struct GridOptions {
  std::uint64_t seed = 7;
  int size = 4;
  double origin_lat = 48.0;
  double origin_lon = 11.5;
  double block_m = 250.0;
  double speed_mps = 12.5;
  int max_queue = 2;
};

/// Node id of grid cell (row, col); rows run north to south, ids are row-major from 1.
inline NodeId grid_node(int size, int row, int col) { return NodeId{row * size + col + 1}; }

/// Grid city: two-way streets of length block_m between neighbours, hospitals at (1, size-1) and
/// (size-1, 1), signals at every non-corner node except hospitals. Ambulance
/// A-1 drives east along row 1 from (1, 0); A-2 departs 15 s later south along
/// column 1 from (0, 1); their routes cross at (1, 1). Signal offsets and
/// initial queues are drawn from the seed.
inline sim::Scenario grid_city(const GridOptions& opt = {}) {
  const int n = opt.size;
  sim::Scenario sc;
  sc.name = "demo-grid-" + std::to_string(n) + "x" + std::to_string(n);
  sc.start_utc = std::chrono::sys_days{std::chrono::year{2024} / 3 / 1} + std::chrono::hours{8};
  sc.sim.seed = opt.seed;
  sc.sim.horizon = Duration{300000};

  constexpr double deg = 3.14159265358979323846 / 180.0;
  const double dlat = opt.block_m / (kEarthRadiusM * deg);
  const double dlon = dlat / std::cos(opt.origin_lat * deg);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      sc.graph.add_node(grid_node(n, r, c), opt.origin_lat - r * dlat, opt.origin_lon + c * dlon);
    }
  }
  auto link = [&](NodeId a, NodeId b) {
    sc.graph.add_edge(a, b, opt.block_m, opt.speed_mps);
    sc.graph.add_edge(b, a, opt.block_m, opt.speed_mps);
  };
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (c + 1 < n) link(grid_node(n, r, c), grid_node(n, r, c + 1));
      if (r + 1 < n) link(grid_node(n, r, c), grid_node(n, r + 1, c));
    }
  }
  const NodeId east_hospital = grid_node(n, 1, n - 1);
  const NodeId south_hospital = grid_node(n, n - 1, 1);
  sc.graph.add_hospital(east_hospital, "East General");
  sc.graph.add_hospital(south_hospital, "South Clinic");

  std::mt19937_64 rng(opt.seed);
  const signals::PhasePlan prototype = signals::two_phase_plan({}, {});
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      const bool corner = (r == 0 || r == n - 1) && (c == 0 || c == n - 1);
      const NodeId id = grid_node(n, r, c);
      if (corner || sc.graph.hospitals().count(id)) continue;
      std::vector<ApproachId> ns, ew;
      if (r > 0) ns.push_back(ApproachId{grid_node(n, r - 1, c).value});
      if (r + 1 < n) ns.push_back(ApproachId{grid_node(n, r + 1, c).value});
      if (c > 0) ew.push_back(ApproachId{grid_node(n, r, c - 1).value});
      if (c + 1 < n) ew.push_back(ApproachId{grid_node(n, r, c + 1).value});
      sim::SignalSpec spec;
      spec.node = id;
      spec.controller = "TL-" + std::to_string(id.value);
      spec.plan = signals::two_phase_plan(ns, ew);
      const auto cycle_s = static_cast<std::uint64_t>(prototype.cycle().count() / 1000);
      spec.offset = Duration{static_cast<std::int64_t>(rng() % cycle_s) * 1000};
      sc.graph.add_intersection(id, spec.controller);
      for (const auto& phase : spec.plan.phases) {
        for (ApproachId a : phase.green) {
          const int q = static_cast<int>(rng() % static_cast<std::uint64_t>(opt.max_queue + 1));
          if (q > 0) sc.sim.initial_queues.push_back(sim::QueueSpec{id, a, q});
        }
      }
      sc.signals.push_back(std::move(spec));
    }
  }

  sc.ambulances.push_back(sim::AmbulanceSpec{"A-1", grid_node(n, 1, 0), std::nullopt, Duration{0},
                                             sim::default_device_number(0)});
  sc.ambulances.push_back(sim::AmbulanceSpec{"A-2", grid_node(n, 0, 1), south_hospital, Duration{15000},
                                             sim::default_device_number(1)});
  return sc;
}

}  // namespace greenwave::demo
