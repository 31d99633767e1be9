#pragma once

// Deterministic discrete-time scenario engine. Per tick, in fixed order:
// SMS network, control room, signal controllers, vehicles, GPS + device.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "greenwave/control_room.hpp"
#include "greenwave/device.hpp"
#include "greenwave/event_log.hpp"
#include "greenwave/expected.hpp"
#include "greenwave/modem.hpp"
#include "greenwave/nmea.hpp"
#include "greenwave/roadnet.hpp"
#include "greenwave/signals.hpp"
#include "greenwave/time.hpp"

namespace greenwave::sim {

enum class SimMode { Baseline, AutoPreempt, Operator };

inline const char* to_string(SimMode m) {
  switch (m) {
    case SimMode::Baseline: return "baseline";
    case SimMode::AutoPreempt: return "auto";
    case SimMode::Operator: return "operator";
  }
  return "?";
}

inline std::optional<SimMode> parse_mode(std::string_view s) {
  if (s == "baseline") return SimMode::Baseline;
  if (s == "auto") return SimMode::AutoPreempt;
  if (s == "operator") return SimMode::Operator;
  return std::nullopt;
}

struct ScenarioError {
  std::string reason;
};

struct SignalSpec {
  NodeId node;
  ControllerId controller;
  signals::PhasePlan plan;
  Duration offset{0};
};

struct AmbulanceSpec {
  std::string id;
  NodeId start;
  std::optional<NodeId> hospital;  // driver's choice; nearest otherwise
  Duration depart{0};
  std::string number;  // the device modem's own SMS address
};

struct QueueSpec {
  NodeId node;
  ApproachId approach;
  int vehicles = 0;
};

struct ScriptedAction {
  Instant at{};
  std::string operator_id;
  control_room::OperatorAction action;
};

struct SimConfig {
  Duration dt{100};
  Duration horizon{900000};
  std::uint64_t seed = 7;
  SimMode mode = SimMode::AutoPreempt;
  modem::SmsNetworkConfig sms;
  Duration queue_discharge{2000};
  std::vector<QueueSpec> initial_queues;
  Duration modem_send_time{300};
  Duration settle_grace{30000};
};

struct DeviceSettings {
  Duration parse_window{1000};
  Duration send_interval{1000};
  bool single_shot = false;
};

struct ControlRoomSettings {
  Duration lead_time{20000};
  Duration passage_margin{10000};
  std::string number = "+15550100";
  std::string hospital_number = "+15550200";
};

struct Scenario {
  std::string name = "scenario";
  UtcSeconds start_utc = std::chrono::sys_days{std::chrono::year{2020} / 1 / 1};
  roadnet::RoadGraph graph;
  std::vector<SignalSpec> signals;
  std::vector<AmbulanceSpec> ambulances;
  SimConfig sim;
  DeviceSettings device;
  ControlRoomSettings control_room;
  std::vector<ScriptedAction> operator_script;
};

inline std::string default_device_number(std::size_t index) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "+1555300%04zu", index + 1);
  return buf;
}

/// Semantic checks beyond the file schema; the reason names the offending item.
inline Expected<Ok, ScenarioError> validate(const Scenario& sc) {
  auto fail = [](std::string why) { return unexpected(ScenarioError{std::move(why)}); };
  const auto& g = sc.graph;
  if (g.nodes().empty()) return fail("graph has no nodes");
  if (g.hospitals().empty()) return fail("graph has no hospitals");
  if (sc.sim.dt.count() <= 0) return fail("sim.dt_s must be positive");
  if (sc.sim.horizon.count() <= 0) return fail("sim.horizon_s must be positive");
  if (sc.sim.queue_discharge.count() < 0) return fail("sim.queue_discharge_s must be non-negative");
  if (sc.sim.sms.loss_probability < 0 || sc.sim.sms.loss_probability > 1) {
    return fail("sim.sms.loss_probability must be in [0, 1]");
  }
  if (sc.sim.sms.latency_min.count() < 0 || sc.sim.sms.latency_max < sc.sim.sms.latency_min) {
    return fail("sim.sms latency range is invalid");
  }
  if (sc.device.parse_window.count() <= 0) return fail("device.parse_window_s must be positive");
  if (sc.device.parse_window.count() % sc.sim.dt.count() != 0) {
    return fail("device.parse_window_s must be a multiple of sim.dt_s");
  }
  if (1000 % sc.sim.dt.count() != 0) return fail("sim.dt_s must divide one second");
  if (sc.device.send_interval < sc.device.parse_window) {
    return fail("device.send_interval_s must be at least the parse window");
  }
  if (!modem::valid_address(sc.control_room.number) || !modem::valid_address(sc.control_room.hospital_number) ||
      sc.control_room.number == sc.control_room.hospital_number) {
    return fail("control_room numbers must be distinct SMS addresses");
  }

  std::set<ControllerId> controllers;
  std::set<NodeId> signal_nodes;
  for (const auto& s : sc.signals) {
    const std::string where = "signal " + s.controller;
    if (!g.has_node(s.node)) return fail(where + ": unknown node " + std::to_string(s.node.value));
    if (!controllers.insert(s.controller).second) return fail(where + ": duplicate controller id");
    if (!signal_nodes.insert(s.node).second) return fail(where + ": node already has a controller");
    if (g.controller_at(s.node) != s.controller) return fail(where + ": not registered as the node's intersection");
    if (!s.plan.valid()) return fail(where + ": phase plan invalid (empty, non-positive duration or conflicting green)");
    std::set<ApproachId> incoming;
    for (EdgeId e : g.in_edges(s.node)) incoming.insert(roadnet::approach_of(g.edge(e)));
    for (ApproachId a : s.plan.approaches()) {
      if (!incoming.count(a)) {
        return fail(where + ": approach " + std::to_string(a.value) + " is not an edge into node " +
                    std::to_string(s.node.value));
      }
    }
    for (ApproachId a : incoming) {
      if (!s.plan.phase_of(a)) {
        return fail(where + ": incoming approach " + std::to_string(a.value) + " is in no phase");
      }
    }
  }
  if (g.intersections().size() != sc.signals.size()) return fail("graph intersection without a signal plan");
  for (const auto& q : sc.sim.initial_queues) {
    const auto it = std::find_if(sc.signals.begin(), sc.signals.end(), [&](const SignalSpec& s) { return s.node == q.node; });
    if (it == sc.signals.end()) return fail("queue at node " + std::to_string(q.node.value) + ": not a signal");
    if (!it->plan.phase_of(q.approach)) {
      return fail("queue at node " + std::to_string(q.node.value) + ": unknown approach " + std::to_string(q.approach.value));
    }
    if (q.vehicles < 0) return fail("queue at node " + std::to_string(q.node.value) + ": negative length");
  }
  if (sc.ambulances.empty()) return fail("no ambulances");
  std::set<std::string> ids;
  std::set<std::string> numbers{sc.control_room.number, sc.control_room.hospital_number};
  for (const auto& a : sc.ambulances) {
    const std::string where = "ambulance " + a.id;
    if (!device::valid_ambulance_id(a.id)) return fail(where + ": id must be 1-16 of [A-Za-z0-9_-]");
    if (!ids.insert(a.id).second) return fail(where + ": duplicate id");
    if (!g.has_node(a.start)) return fail(where + ": unknown start node " + std::to_string(a.start.value));
    if (!modem::valid_address(a.number) || !numbers.insert(a.number).second) {
      return fail(where + ": device number missing, invalid or shared");
    }
    if (a.depart.count() < 0) return fail(where + ": negative depart time");
    if (a.hospital) {
      if (!g.hospitals().count(*a.hospital)) {
        return fail(where + ": node " + std::to_string(a.hospital->value) + " is not a hospital");
      }
      if (!roadnet::shortest_path(g, a.start, *a.hospital)) return fail(where + ": pinned hospital unreachable");
    } else if (!roadnet::nearest_hospital(g, a.start)) {
      return fail(where + ": no hospital reachable");
    }
  }
  return Ok{};
}

// ---------------------------------------------------------------------------
// Vehicle kinematics

struct IntersectionWait {
  NodeId node;
  double wait_s = 0.0;
};

struct NodeArrival {
  NodeId node;
  double time_s = 0.0;  // reached the stop line
};

struct VehicleState {
  std::string ambulance_id;
  roadnet::Route route;
  std::size_t edge_index = 0;
  double distance_m = 0.0;  // along the current edge
  double speed_mps = 0.0;
  bool stopped = false;
  int stops_count = 0;
  double depart_s = 0.0;
  std::optional<double> arrive_s;
  double stopped_since_s = 0.0;
  std::vector<IntersectionWait> waits;
  std::vector<NodeArrival> node_arrivals;

  bool arrived() const { return arrive_s.has_value(); }
};

/// What a vehicle at a stop line sees.
struct Passage {
  bool signalized = false;
  bool passable = true;
  double passable_for_s = std::numeric_limits<double>::infinity();  // continuously passable this long
};

inline VehicleState make_vehicle(std::string id, roadnet::Route route, double depart_s) {
  VehicleState v;
  v.ambulance_id = std::move(id);
  v.route = std::move(route);
  v.depart_s = depart_s;
  if (v.route.edges.empty()) v.arrive_s = depart_s;
  return v;
}

/// Advances over the tick (tick_end - dt, tick_end]. `lookup(node, approach)`
/// returns the Passage at the end of the tick. The vehicle moves at edge speed,
/// stops at a non-passable stop line and leaves at the exact instant the
/// approach became passable (green and queue discharged).
template <class Lookup>
VehicleState step_vehicle(VehicleState v, const roadnet::RoadGraph& g, Lookup&& lookup, double tick_end_s,
                          double dt_s) {
  if (v.arrived() || tick_end_s <= v.depart_s) return v;
  double cursor = std::max(tick_end_s - dt_s, v.depart_s);
  for (;;) {
    const roadnet::Edge& edge = g.edge(v.route.edges[v.edge_index]);
    if (v.stopped) {
      const Passage p = lookup(edge.to, roadnet::approach_of(edge));
      if (!p.passable) {
        v.speed_mps = 0.0;
        return v;
      }
      const double leave = std::max(cursor, tick_end_s - p.passable_for_s);
      v.waits.push_back(IntersectionWait{edge.to, leave - v.stopped_since_s});
      v.stopped = false;
      cursor = leave;
      ++v.edge_index;
      v.distance_m = 0.0;
      continue;
    }
    v.speed_mps = edge.speed_mps;
    const double to_end = (edge.length_m - v.distance_m) / edge.speed_mps;
    if (cursor + to_end > tick_end_s) {
      v.distance_m = std::min(edge.length_m, v.distance_m + (tick_end_s - cursor) * edge.speed_mps);
      return v;
    }
    cursor += to_end;
    v.distance_m = edge.length_m;
    if (v.edge_index + 1 == v.route.edges.size()) {
      v.arrive_s = cursor;
      v.speed_mps = 0.0;
      return v;
    }
    const Passage p = lookup(edge.to, roadnet::approach_of(edge));
    if (!p.signalized) {
      ++v.edge_index;
      v.distance_m = 0.0;
      continue;
    }
    v.node_arrivals.push_back(NodeArrival{edge.to, cursor});
    const double open_since = tick_end_s - p.passable_for_s;
    if (p.passable && open_since <= cursor) {
      v.waits.push_back(IntersectionWait{edge.to, 0.0});
      ++v.edge_index;
      v.distance_m = 0.0;
      continue;
    }
    ++v.stops_count;
    v.stopped = true;
    v.stopped_since_s = cursor;
    if (!p.passable) {
      v.speed_mps = 0.0;
      return v;
    }
  }
}

struct LatLon {
  double latitude = 0.0;
  double longitude = 0.0;
};

/// Linear interpolation along the current edge.
inline LatLon vehicle_position(const VehicleState& v, const roadnet::RoadGraph& g) {
  if (v.route.edges.empty()) {
    const auto& n = g.node(v.route.node_sequence.front());
    return {n.latitude, n.longitude};
  }
  const roadnet::Edge& e = g.edge(v.route.edges[v.edge_index]);
  const auto& a = g.node(e.from);
  const auto& b = g.node(e.to);
  const double t = std::clamp(v.distance_m / e.length_m, 0.0, 1.0);
  return {a.latitude + t * (b.latitude - a.latitude), a.longitude + t * (b.longitude - a.longitude)};
}

/// GGA sentence (with CRLF) for the vehicle's position at `utc_time` seconds of day.
inline std::string synthesize_fix(const VehicleState& v, const roadnet::RoadGraph& g, double utc_time) {
  const LatLon p = vehicle_position(v, g);
  nmea::GeoPosition fix;
  fix.latitude = p.latitude;
  fix.longitude = p.longitude;
  fix.utc_time = utc_time;
  fix.fix_quality = 1;
  fix.satellites = 8;
  fix.hdop = 0.9;
  fix.altitude_m = 10.0;
  return nmea::format_gga(fix) + "\r\n";
}

// ---------------------------------------------------------------------------
// Metrics

struct MessageCounters {
  std::uint64_t sent = 0;
  std::uint64_t delivered = 0;
  std::uint64_t lost = 0;
  std::uint64_t dropped_busy = 0;
};

struct AmbulanceMetrics {
  std::string ambulance_id;
  NodeId hospital;
  double depart_s = 0.0;
  std::optional<double> arrive_s;
  std::optional<double> travel_time_s;
  int stops_count = 0;
  std::vector<IntersectionWait> waits;
  std::vector<NodeArrival> node_arrivals;
  MessageCounters messages;
};

struct RunMetrics {
  std::string scenario;
  SimMode mode = SimMode::AutoPreempt;
  std::uint64_t seed = 0;
  std::vector<AmbulanceMetrics> ambulances;
  MessageCounters messages;
  std::uint64_t preempt_commands = 0;
  std::uint64_t release_commands = 0;
  double end_s = 0.0;
  bool completed = false;  // every ambulance arrived before the horizon
};

// ---------------------------------------------------------------------------
// Engine

class Simulation {
 public:
  enum class Phase { Running, Settling, Draining, Done };

  /// Precondition: validate(scenario) succeeded.
  explicit Simulation(Scenario scenario)
      : sc_(std::move(scenario)),
        net_(sms_config(sc_)),
        control_room_(sc_.graph, bank_, control_room_config(sc_), log_) {
    for (const auto& s : sc_.signals) {
      bank_.add(signals::Controller{s.controller, s.node, s.plan, signals::initial_state(s.plan, s.offset), {}});
    }
    for (const auto& q : sc_.sim.initial_queues) queue_work_[{q.node, q.approach}] = q.vehicles * sc_.sim.queue_discharge;
    for (std::size_t i = 0; i < sc_.ambulances.size(); ++i) {
      const auto& a = sc_.ambulances[i];
      roadnet::Route route;
      NodeId hospital;
      if (a.hospital) {
        route = *roadnet::shortest_path(sc_.graph, a.start, *a.hospital);
        hospital = *a.hospital;
        control_room_.pin_hospital(a.id, *a.hospital);
      } else {
        auto hr = *roadnet::nearest_hospital(sc_.graph, a.start);
        route = std::move(hr.route);
        hospital = hr.hospital;
      }
      units_.push_back(Unit{make_vehicle(a.id, std::move(route), to_seconds(a.depart)),
                            device::Device(device_config(sc_, a), UtcAnchor{sc_.start_utc}),
                            modem::Modem(a.number, sc_.sim.modem_send_time), {}, hospital, {}});
      number_to_unit_[a.number] = i;
    }
    std::stable_sort(sc_.operator_script.begin(), sc_.operator_script.end(),
                     [](const ScriptedAction& x, const ScriptedAction& y) { return x.at < y.at; });
    emit_gps();
  }

  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  const Scenario& scenario() const { return sc_; }
  Instant now() const { return now_; }
  Phase phase() const { return phase_; }
  bool done() const { return phase_ == Phase::Done; }
  const EventLog& events() const { return log_; }
  EventLog& events() { return log_; }
  const control_room::ControlRoom& control_room() const { return control_room_; }
  const signals::SignalBank& signal_bank() const { return bank_; }
  const modem::SmsNetwork& network() const { return net_; }
  std::vector<const VehicleState*> vehicles() const {
    std::vector<const VehicleState*> out;
    for (const auto& u : units_) out.push_back(&u.vehicle);
    return out;
  }

  /// Operator command applied between ticks (interactive serving).
  Expected<Ok, control_room::Rejection> operator_command(const control_room::OperatorAction& action,
                                                         const std::string& operator_id) {
    auto r = control_room_.operator_command(action, operator_id, now_);
    apply_reroutes();
    return r;
  }

  void tick() {
    const Duration dt = sc_.sim.dt;
    now_ += dt;
    const bool preempting = sc_.sim.mode != SimMode::Baseline;

    for (const auto& env : net_.deliver_due(now_)) {
      if (auto it = number_to_unit_.find(env.from); it != number_to_unit_.end()) {
        ++units_[it->second].messages.delivered;
      }
      control_room_.receive(env, now_);
    }

    while (preempting && script_pos_ < sc_.operator_script.size() && sc_.operator_script[script_pos_].at <= now_) {
      const auto& s = sc_.operator_script[script_pos_++];
      control_room_.operator_command(s.action, s.operator_id, now_);
    }
    apply_reroutes();
    forward(control_room_.dispatch(now_));

    bank_.advance(dt, [&](const signals::Controller& c) { log_signal(c); });

    const double end_s = to_seconds(now_);
    for (auto& u : units_) {
      u.vehicle = step_vehicle(std::move(u.vehicle), sc_.graph,
                               [&](NodeId node, ApproachId a) { return passage(node, a); }, end_s, to_seconds(dt));
    }

    if (devices_on_) {
      if (now_.time_since_epoch() % sc_.device.parse_window == Duration{0}) {
        for (auto& u : units_) {
          if (now_ <= instant_at(u.vehicle.depart_s)) continue;
          auto r = u.device.tick(now_, u.window, u.modem, net_);
          u.window.clear();
          (void)r;
        }
      }
      emit_gps();
    }
    advance_phase();
  }

  /// Ticks until done.
  void run_to_completion() {
    while (!done()) tick();
  }

  RunMetrics metrics() const {
    RunMetrics m;
    m.scenario = sc_.name;
    m.mode = sc_.sim.mode;
    m.seed = sc_.sim.seed;
    m.end_s = to_seconds(now_);
    m.completed = std::all_of(units_.begin(), units_.end(), [&](const Unit& u) {
      return u.vehicle.arrived() && *u.vehicle.arrive_s <= to_seconds(sc_.sim.horizon);
    });
    std::map<std::string, std::uint64_t> lost;
    for (const auto& env : net_.lost_envelopes()) ++lost[env.from];
    for (const auto& u : units_) {
      AmbulanceMetrics a;
      a.ambulance_id = u.vehicle.ambulance_id;
      a.hospital = u.hospital;
      a.depart_s = u.vehicle.depart_s;
      a.arrive_s = u.vehicle.arrive_s;
      if (a.arrive_s) a.travel_time_s = *a.arrive_s - a.depart_s;
      a.stops_count = u.vehicle.stops_count;
      a.waits = u.vehicle.waits;
      a.node_arrivals = u.vehicle.node_arrivals;
      a.messages.sent = u.device.state().messages_sent;
      a.messages.dropped_busy = u.device.state().messages_dropped;
      a.messages.delivered = u.messages.delivered;
      a.messages.lost = lost[u.modem.number()];
      m.messages.sent += a.messages.sent;
      m.messages.dropped_busy += a.messages.dropped_busy;
      m.messages.delivered += a.messages.delivered;
      m.messages.lost += a.messages.lost;
      m.ambulances.push_back(std::move(a));
    }
    for (const auto& r : log_.read(0)) {
      if (r.kind == EventKind::PreemptSent) ++m.preempt_commands;
      if (r.kind == EventKind::ReleaseSent) ++m.release_commands;
    }
    return m;
  }

  static control_room::ControlRoomConfig control_room_config(const Scenario& sc) {
    control_room::ControlRoomConfig c;
    c.lead_time = sc.control_room.lead_time;
    c.passage_margin = sc.control_room.passage_margin;
    c.expected_send_interval = sc.device.send_interval;
    c.number = sc.control_room.number;
    c.hospital_number = sc.control_room.hospital_number;
    c.automatic = sc.sim.mode == SimMode::AutoPreempt;
    c.utc = UtcAnchor{sc.start_utc};
    return c;
  }

 private:
  struct Unit {
    VehicleState vehicle;
    device::Device device;
    modem::Modem modem;
    std::vector<device::SerialChunk> window;
    NodeId hospital;
    struct {
      std::uint64_t delivered = 0;
    } messages;
  };

  static modem::SmsNetworkConfig sms_config(const Scenario& sc) {
    modem::SmsNetworkConfig c = sc.sim.sms;
    c.rng_seed = sc.sim.seed;
    return c;
  }

  static device::DeviceConfig device_config(const Scenario& sc, const AmbulanceSpec& a) {
    device::DeviceConfig c;
    c.ambulance_id = a.id;
    c.parse_window = sc.device.parse_window;
    c.send_interval = sc.device.send_interval;
    c.single_shot = sc.device.single_shot;
    c.control_room_number = sc.control_room.number;
    c.hospital_number = sc.control_room.hospital_number;
    return c;
  }

  Passage passage(NodeId node, ApproachId a) const {
    auto c = sc_.graph.controller_at(node);
    if (!c) return Passage{};
    const signals::ControllerState& st = bank_.at(*c).state;
    if (st.indication(a) != signals::Indication::Green) return Passage{true, false, 0.0};
    double work = 0.0;
    if (auto it = queue_work_.find({node, a}); it != queue_work_.end()) work = to_seconds(it->second);
    const double served = to_seconds(st.green_total.at(a));
    if (served < work) return Passage{true, false, 0.0};
    return Passage{true, true, std::min(to_seconds(st.green_elapsed), served - work)};
  }

  void forward(std::vector<signals::ControllerCommand> cmds) {
    for (auto& c : cmds) {
      if (bank_.contains(c.controller)) bank_.enqueue(std::move(c));
    }
  }

  void log_signal(const signals::Controller& c) {
    nlohmann::json green = nlohmann::json::array();
    for (ApproachId a : c.state.green()) green.push_back(a.value);
    nlohmann::json p{{"controller", c.id},
                     {"mode", signals::to_string(c.state.mode)},
                     {"stage", signals::to_string(c.state.stage)},
                     {"green", green}};
    if (auto h = c.state.holder()) p["holder"] = *h;
    log_.append(now_, EventKind::SignalChanged, std::move(p));
  }

  void apply_reroutes() {
    for (const auto& rr : control_room_.take_reroutes()) {
      for (auto& u : units_) {
        if (u.vehicle.ambulance_id != rr.ambulance_id) continue;
        reroute(u, rr.hospital);
      }
    }
  }

  // The driver keeps the current edge and follows a fresh shortest path from its head.
  void reroute(Unit& u, NodeId hospital) {
    VehicleState& v = u.vehicle;
    u.hospital = hospital;
    if (v.arrived() || v.route.edges.empty()) return;
    const roadnet::Edge& e = sc_.graph.edge(v.route.edges[v.edge_index]);
    auto tail = roadnet::shortest_path(sc_.graph, e.to, hospital);
    if (!tail) return;
    std::vector<NodeId> nodes{e.from};
    nodes.insert(nodes.end(), tail->node_sequence.begin(), tail->node_sequence.end());
    if (e.to == hospital) nodes = {e.from, e.to};
    v.route = *roadnet::route_from_nodes(sc_.graph, nodes);
    v.edge_index = 0;
  }

  void emit_gps() {
    if (now_.time_since_epoch() % Duration{1000} != Duration{0}) return;
    const auto utc = UtcAnchor{sc_.start_utc}.at(now_);
    const double tod = static_cast<double>((utc - std::chrono::floor<std::chrono::days>(utc)).count());
    for (auto& u : units_) {
      if (now_ < instant_at(u.vehicle.depart_s)) continue;
      u.window.push_back(device::SerialChunk{now_, synthesize_fix(u.vehicle, sc_.graph, tod)});
    }
  }

  void advance_phase() {
    const bool all_arrived = std::all_of(units_.begin(), units_.end(), [](const Unit& u) { return u.vehicle.arrived(); });
    const bool past_horizon = now_ >= Instant{sc_.sim.horizon};
    switch (phase_) {
      case Phase::Running:
        if (past_horizon) {
          begin_drain();
        } else if (all_arrived) {
          phase_ = Phase::Settling;
          settle_deadline_ = now_ + sc_.sim.settle_grace;
        }
        break;
      case Phase::Settling:
        if (control_room_.all_arrived() || now_ >= settle_deadline_ || past_horizon) begin_drain();
        break;
      case Phase::Draining:
        break;
      case Phase::Done:
        return;
    }
    if (phase_ == Phase::Draining && net_.in_flight() == 0) {
      forward(control_room_.finalize(now_));
      bank_.advance(Duration{0}, [&](const signals::Controller& c) { log_signal(c); });
      phase_ = Phase::Done;
    }
  }

  void begin_drain() {
    phase_ = Phase::Draining;
    devices_on_ = false;
  }

  Scenario sc_;
  EventLog log_;
  signals::SignalBank bank_;
  modem::SmsNetwork net_;
  control_room::ControlRoom control_room_;
  std::vector<Unit> units_;
  std::map<std::string, std::size_t> number_to_unit_;
  std::map<std::pair<NodeId, ApproachId>, Duration> queue_work_;
  Instant now_{};
  Phase phase_ = Phase::Running;
  Instant settle_deadline_{};
  bool devices_on_ = true;
  std::size_t script_pos_ = 0;
};

struct RunResult {
  RunMetrics metrics;
  std::string event_log;  // JSONL
};

/// Validates, then runs the scenario in `mode` to completion.
inline Expected<RunResult, ScenarioError> run(Scenario scenario, SimMode mode) {
  if (auto ok = validate(scenario); !ok) return unexpected(ok.error());
  scenario.sim.mode = mode;
  Simulation sim(std::move(scenario));
  sim.run_to_completion();
  return RunResult{sim.metrics(), sim.events().to_jsonl()};
}

/// Re-drives a fresh control room and signal bank with the inputs recorded in
/// `log` (delivered messages and operator actions, at their recorded ticks) and
/// returns the log it produces. Matches the original for runs driven by cmd_run.
inline std::string replay_control_room(const Scenario& sc, const EventLog& original) {
  EventLog log;
  signals::SignalBank bank;
  for (const auto& s : sc.signals) {
    bank.add(signals::Controller{s.controller, s.node, s.plan, signals::initial_state(s.plan, s.offset), {}});
  }
  control_room::ControlRoom room(sc.graph, bank, Simulation::control_room_config(sc), log);
  for (const auto& a : sc.ambulances) {
    if (a.hospital) room.pin_hospital(a.id, *a.hospital);
  }
  const auto records = original.read(0);
  auto log_signal = [&](const signals::Controller& c, Instant now) {
    nlohmann::json green = nlohmann::json::array();
    for (ApproachId a : c.state.green()) green.push_back(a.value);
    nlohmann::json p{{"controller", c.id},
                     {"mode", signals::to_string(c.state.mode)},
                     {"stage", signals::to_string(c.state.stage)},
                     {"green", green}};
    if (auto h = c.state.holder()) p["holder"] = *h;
    log.append(now, EventKind::SignalChanged, std::move(p));
  };
  auto forward = [&](std::vector<signals::ControllerCommand> cmds) {
    for (auto& c : cmds) {
      if (bank.contains(c.controller)) bank.enqueue(std::move(c));
    }
  };
  const Instant end = records.empty() ? Instant{} : records.back().time;
  std::size_t pos = 0;
  for (Instant now = Instant{} + sc.sim.dt; now <= end; now += sc.sim.dt) {
    for (; pos < records.size() && records[pos].time <= now; ++pos) {
      const auto& r = records[pos];
      if (r.time != now) continue;
      if (r.kind == EventKind::MsgReceived) {
        const auto& p = r.payload;
        if (p.at("recipient") == "control_room") {
          room.ingest_message(p.at("body").get<std::string>(), now);
        } else {
          modem::SmsEnvelope env;
          env.from = p.at("from").get<std::string>();
          env.to = p.at("to").get<std::string>();
          env.body = p.at("body").get<std::string>();
          room.receive(env, now);
        }
      } else if (r.kind == EventKind::OperatorAction) {
        const auto& p = r.payload;
        const std::string kind = p.at("action").get<std::string>();
        control_room::OperatorAction action;
        if (kind == "preempt") {
          action = control_room::Preempt{p.at("controller").get<std::string>(), ApproachId{p.at("approach").get<std::int64_t>()}};
        } else if (kind == "release") {
          action = control_room::Release{p.at("controller").get<std::string>()};
        } else {
          action = control_room::PinRoute{p.at("ambulance").get<std::string>(), NodeId{p.at("hospital").get<std::int64_t>()}};
        }
        room.operator_command(action, p.at("operator").get<std::string>(), now);
      }
    }
    room.take_reroutes();
    forward(room.dispatch(now));
    bank.advance(sc.sim.dt, [&](const signals::Controller& c) { log_signal(c, now); });
    if (now == end) {
      forward(room.finalize(now));
      bank.advance(Duration{0}, [&](const signals::Controller& c) { log_signal(c, now); });
    }
  }
  return log.to_jsonl();
}

}  // namespace greenwave::sim
