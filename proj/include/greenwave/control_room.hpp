#pragma once

// Traffic control room: turns delivered location messages into ambulance
// tracks, routes each ambulance, and drives signal preemption along the route.

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "greenwave/device.hpp"
#include "greenwave/event_log.hpp"
#include "greenwave/expected.hpp"
#include "greenwave/modem.hpp"
#include "greenwave/roadnet.hpp"
#include "greenwave/signals.hpp"
#include "greenwave/time.hpp"

namespace greenwave::control_room {

enum class TrackStatus { Active, Arrived, Stale };

inline const char* to_string(TrackStatus s) {
  switch (s) {
    case TrackStatus::Active: return "ACTIVE";
    case TrackStatus::Arrived: return "ARRIVED";
    case TrackStatus::Stale: return "STALE";
  }
  return "?";
}

struct ParseReject {
  std::string reason;
};

struct LocationReport {
  std::string ambulance_id;
  UtcSeconds timestamp{};
  double latitude = 0.0;
  double longitude = 0.0;
};

namespace detail {

// Signed fixed-point with exactly six decimals.
inline std::optional<double> parse_fixed6(std::string_view s) {
  std::string_view digits = s;
  if (!digits.empty() && digits.front() == '-') digits.remove_prefix(1);
  const auto dot = digits.find('.');
  if (dot == std::string_view::npos || dot == 0 || digits.size() - dot - 1 != 6) return std::nullopt;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != dot && (digits[i] < '0' || digits[i] > '9')) return std::nullopt;
  }
  double v = 0.0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Inverse of the device's message grammar.
inline Expected<LocationReport, ParseReject> parse_location_body(std::string_view body) {
  const auto s1 = body.find(' ');
  if (s1 == std::string_view::npos) return unexpected(ParseReject{"missing fields"});
  const auto s2 = body.find(' ', s1 + 1);
  if (s2 == std::string_view::npos) return unexpected(ParseReject{"missing fields"});
  if (body.find(' ', s2 + 1) != std::string_view::npos) return unexpected(ParseReject{"extra fields"});
  LocationReport r;
  r.ambulance_id = std::string(body.substr(0, s1));
  if (!device::valid_ambulance_id(r.ambulance_id)) return unexpected(ParseReject{"bad ambulance id"});
  auto ts = parse_iso8601(body.substr(s1 + 1, s2 - s1 - 1));
  if (!ts) return unexpected(ParseReject{"bad timestamp"});
  r.timestamp = *ts;
  std::string_view link = body.substr(s2 + 1);
  if (!link.starts_with(device::kMapsPrefix)) return unexpected(ParseReject{"bad maps link"});
  link.remove_prefix(device::kMapsPrefix.size());
  const auto comma = link.find(',');
  if (comma == std::string_view::npos) return unexpected(ParseReject{"bad maps link"});
  auto lat = detail::parse_fixed6(link.substr(0, comma));
  auto lon = detail::parse_fixed6(link.substr(comma + 1));
  if (!lat || !lon || *lat < -90 || *lat > 90 || *lon < -180 || *lon > 180) {
    return unexpected(ParseReject{"bad coordinates"});
  }
  r.latitude = *lat;
  r.longitude = *lon;
  return r;
}

struct FixRecord {
  UtcSeconds time{};
  Instant sim_time{};
  double latitude = 0.0;
  double longitude = 0.0;
};

struct CorridorEntry {
  ControllerId controller;
  NodeId node;
  ApproachId approach;
  std::size_t route_index = 0;
  Instant eta{};
  Instant activate_at{};  // eta - lead_time
  Instant release_by{};   // eta + passage_margin
};

struct CorridorPlan {
  std::string ambulance_id;
  std::vector<CorridorEntry> entries;
};

enum class EntryStatus { Pending, Requested, Done };

struct CorridorSlot {
  CorridorEntry entry;
  double node_offset_m = 0.0;
  EntryStatus status = EntryStatus::Pending;
};

struct AmbulanceTrack {
  std::string ambulance_id;
  std::vector<FixRecord> fixes;
  std::optional<roadnet::MapMatch> matched;
  std::optional<NodeId> destination;
  std::optional<roadnet::Route> route;
  std::optional<roadnet::RouteProgress> progress;
  TrackStatus status = TrackStatus::Active;
  Instant last_received{};
  std::vector<CorridorSlot> corridor;

  const FixRecord* latest() const { return fixes.empty() ? nullptr : &fixes.back(); }

  std::optional<Instant> eta_destination() const {
    if (!route || !progress || fixes.empty()) return std::nullopt;
    return fixes.back().sim_time + from_seconds(route->total_time_s - progress->offset_s);
  }
};

struct ControlRoomConfig {
  Duration lead_time{20000};
  Duration passage_margin{10000};
  Duration expected_send_interval{1000};
  int stale_factor = 3;
  double arrival_radius_m = 5.0;
  double passage_tolerance_m = 1.0;
  std::string number = "+15550100";
  std::string hospital_number = "+15550200";
  bool automatic = true;  // false: only operator commands touch the signals
  UtcAnchor utc;
};

struct TrackUpdate {
  std::string ambulance_id;
  bool created = false;
  bool accepted = true;  // false: stale or duplicate, discarded
};

struct Preempt {
  ControllerId controller;
  ApproachId approach;
};
struct Release {
  ControllerId controller;
};
struct PinRoute {
  std::string ambulance_id;
  NodeId hospital;
};
using OperatorAction = std::variant<Preempt, Release, PinRoute>;

struct Rejection {
  enum class Kind { UnknownController, UnknownApproach, UnknownAmbulance, UnknownHospital, NothingToRelease, Unreachable };
  Kind kind;
  std::string message;

  int http_status() const { return kind == Kind::UnknownApproach ? 409 : 404; }
};

/// Route change ordered by an operator; the simulator tells the driver.
struct Reroute {
  std::string ambulance_id;
  NodeId hospital;
};

class ControlRoom {
 public:
  ControlRoom(const roadnet::RoadGraph& graph, const signals::SignalBank& bank, ControlRoomConfig cfg,
              EventLog& log)
      : graph_(graph), bank_(bank), cfg_(std::move(cfg)), log_(log) {}

  const ControlRoomConfig& config() const { return cfg_; }
  const std::map<std::string, AmbulanceTrack>& tracks() const { return tracks_; }
  const AmbulanceTrack* track(const std::string& id) const {
    auto it = tracks_.find(id);
    return it == tracks_.end() ? nullptr : &it->second;
  }
  std::uint64_t stale_discarded() const { return stale_discarded_; }
  std::uint64_t rejected() const { return rejected_; }

  /// Destination chosen by the driver before departure.
  void pin_hospital(const std::string& ambulance_id, NodeId hospital) { pinned_[ambulance_id] = hospital; }

  bool all_arrived() const {
    if (tracks_.empty()) return false;
    return std::all_of(tracks_.begin(), tracks_.end(),
                       [](const auto& kv) { return kv.second.status == TrackStatus::Arrived; });
  }

  /// Entry point for delivered SMS. Hospital copies are only logged.
  void receive(const modem::SmsEnvelope& env, Instant now) {
    if (env.to == cfg_.number) {
      ingest_message(env.body, now);
      return;
    }
    log_.append(now, EventKind::MsgReceived,
                {{"recipient", env.to == cfg_.hospital_number ? "hospital" : "unknown"},
                 {"from", env.from},
                 {"to", env.to},
                 {"body", env.body}});
  }

  Expected<TrackUpdate, ParseReject> ingest_message(std::string_view body, Instant received_at) {
    nlohmann::json msg{{"recipient", "control_room"}, {"body", std::string(body)}};
    auto parsed = parse_location_body(body);
    if (!parsed) {
      ++rejected_;
      msg["outcome"] = "rejected";
      msg["reason"] = parsed.error().reason;
      log_.append(received_at, EventKind::MsgReceived, std::move(msg));
      return unexpected(parsed.error());
    }
    const LocationReport& rep = *parsed;
    TrackUpdate update{rep.ambulance_id, false, true};
    auto [it, created] = tracks_.try_emplace(rep.ambulance_id);
    AmbulanceTrack& t = it->second;
    update.created = created;
    if (created) t.ambulance_id = rep.ambulance_id;
    if (!t.fixes.empty() && rep.timestamp <= t.fixes.back().time) {
      ++stale_discarded_;
      update.accepted = false;
      msg["outcome"] = "stale";
      log_.append(received_at, EventKind::MsgReceived, std::move(msg));
      return update;
    }
    msg["outcome"] = "accepted";
    log_.append(received_at, EventKind::MsgReceived, std::move(msg));

    t.fixes.push_back(FixRecord{rep.timestamp, cfg_.utc.to_sim(rep.timestamp), rep.latitude, rep.longitude});
    t.last_received = received_at;
    t.matched = roadnet::map_match(graph_, rep.latitude, rep.longitude);
    if (t.status == TrackStatus::Stale) t.status = TrackStatus::Active;
    if (t.route) refresh_progress(t);
    log_track(t, received_at);

    if (!t.route && t.status != TrackStatus::Arrived) {
      auto pin = pinned_.find(t.ambulance_id);
      assign_route(t.ambulance_id, received_at,
                   pin == pinned_.end() ? std::nullopt : std::optional<NodeId>(pin->second));
    }
    if (t.status == TrackStatus::Active && t.destination && t.matched->node == *t.destination &&
        t.matched->distance_m <= cfg_.arrival_radius_m) {
      t.status = TrackStatus::Arrived;
      log_.append(received_at, EventKind::Arrived,
                  {{"ambulance", t.ambulance_id}, {"node", t.destination->value}});
    }
    return update;
  }

  /// Routes the track from its latest fix to the pinned hospital, else the nearest.
  Expected<roadnet::Route, roadnet::RouteError> assign_route(const std::string& ambulance_id, Instant now,
                                                             std::optional<NodeId> pinned) {
    AmbulanceTrack& t = tracks_.at(ambulance_id);
    if (!t.matched) return unexpected(roadnet::RouteError::UnknownNode);
    const NodeId origin = t.matched->node;
    roadnet::Route route;
    NodeId hospital;
    if (pinned) {
      auto r = roadnet::shortest_path(graph_, origin, *pinned);
      if (!r) return unexpected(roadnet::RouteError::AllUnreachable);
      route = std::move(*r);
      hospital = *pinned;
    } else {
      auto r = roadnet::nearest_hospital(graph_, origin);
      if (!r) return unexpected(r.error());
      route = std::move(r->route);
      hospital = r->hospital;
    }
    install_route(t, std::move(route), hospital, now, pinned ? "pinned" : "nearest");
    return *t.route;
  }

  /// Preemption windows for the signals the ambulance has not yet passed.
  /// Times are dead-reckoned at free-flow speed from the latest fix.
  CorridorPlan plan_corridor(const AmbulanceTrack& t) const {
    CorridorPlan plan{t.ambulance_id, {}};
    if (!t.route || !t.progress || t.fixes.empty()) return plan;
    const Instant fix_time = t.fixes.back().sim_time;
    for (const auto& sig : roadnet::route_intersections(graph_, *t.route)) {
      const double node_m = t.route->distance_offsets_m[sig.route_index];
      if (t.progress->offset_m > node_m + cfg_.passage_tolerance_m) continue;
      CorridorEntry e{sig.controller, sig.node, sig.approach, sig.route_index, {}, {}, {}};
      e.eta = fix_time + from_seconds(sig.arrival_offset_s - t.progress->offset_s);
      e.activate_at = e.eta - cfg_.lead_time;
      e.release_by = e.eta + cfg_.passage_margin;
      plan.entries.push_back(e);
    }
    return plan;
  }

  /// Per-tick command generation: request at activate_at, release on passage,
  /// arrival or release_by. Operator commands issued since the last call come first.
  std::vector<signals::ControllerCommand> dispatch(Instant now) {
    std::vector<signals::ControllerCommand> out = std::move(outbox_);
    outbox_.clear();
    for (auto& [id, t] : tracks_) {
      if (t.status != TrackStatus::Arrived && !t.fixes.empty() &&
          now - t.last_received > cfg_.expected_send_interval * cfg_.stale_factor && t.status != TrackStatus::Stale) {
        t.status = TrackStatus::Stale;
        log_track(t, now);
      }
      for (auto& slot : t.corridor) {
        if (slot.status == EntryStatus::Done) continue;
        const bool passed = t.progress && t.progress->offset_m > slot.node_offset_m + cfg_.passage_tolerance_m;
        if (t.status == TrackStatus::Arrived || passed) {
          if (slot.status == EntryStatus::Requested) {
            out.push_back(release(t, slot, now, t.status == TrackStatus::Arrived ? "arrived" : "passed"));
          }
          slot.status = EntryStatus::Done;
          continue;
        }
        if (slot.status == EntryStatus::Requested && now >= slot.entry.release_by) {
          out.push_back(release(t, slot, now, "timeout"));
          slot.status = EntryStatus::Pending;
          continue;
        }
        if (cfg_.automatic && slot.status == EntryStatus::Pending && now >= slot.entry.activate_at &&
            now < slot.entry.release_by) {
          out.push_back(request(t, slot, now));
          slot.status = EntryStatus::Requested;
        }
      }
    }
    return out;
  }

  Expected<Ok, Rejection> operator_command(const OperatorAction& action, std::string_view operator_id,
                                           Instant now) {
    auto result = std::visit([&](const auto& a) { return apply(a, operator_id, now); }, action);
    nlohmann::json payload = describe(action);
    payload["operator"] = std::string(operator_id);
    payload["result"] = result ? "applied" : "rejected";
    if (!result) payload["reason"] = result.error().message;
    log_.append(now, EventKind::OperatorAction, std::move(payload));
    if (result) flush_operator_events(now);
    return result;
  }

  /// Releases every outstanding request at the end of a run.
  std::vector<signals::ControllerCommand> finalize(Instant now) {
    std::vector<signals::ControllerCommand> out = std::move(outbox_);
    outbox_.clear();
    for (auto& [id, t] : tracks_) {
      for (auto& slot : t.corridor) {
        if (slot.status == EntryStatus::Requested) out.push_back(release(t, slot, now, "shutdown"));
        slot.status = EntryStatus::Done;
      }
    }
    for (auto& [controller, op] : operator_holds_) {
      log_.append(now, EventKind::ReleaseSent,
                  {{"ambulance", op}, {"controller", controller}, {"reason", "shutdown"}, {"source", "operator"}});
      out.push_back(signals::ControllerCommand{controller, signals::ControllerCommand::Kind::Release, {}, op});
    }
    operator_holds_.clear();
    return out;
  }

  std::vector<Reroute> take_reroutes() {
    std::vector<Reroute> out = std::move(reroutes_);
    reroutes_.clear();
    return out;
  }

 private:
  void install_route(AmbulanceTrack& t, roadnet::Route route, NodeId hospital, Instant now, const char* source) {
    t.destination = hospital;
    t.route = std::move(route);
    t.progress.reset();
    t.corridor.clear();
    for (const auto& sig : roadnet::route_intersections(graph_, *t.route)) {
      CorridorSlot slot;
      slot.entry = CorridorEntry{sig.controller, sig.node, sig.approach, sig.route_index, {}, {}, {}};
      slot.node_offset_m = t.route->distance_offsets_m[sig.route_index];
      t.corridor.push_back(slot);
    }
    nlohmann::json nodes = nlohmann::json::array();
    for (NodeId n : t.route->node_sequence) nodes.push_back(n.value);
    log_.append(now, EventKind::RouteSet,
                {{"ambulance", t.ambulance_id},
                 {"hospital", hospital.value},
                 {"nodes", nodes},
                 {"total_time_s", t.route->total_time_s},
                 {"source", source}});
    refresh_progress(t);
  }

  void refresh_progress(AmbulanceTrack& t) {
    const FixRecord& f = t.fixes.back();
    const std::size_t from = t.progress ? t.progress->edge_index : 0;
    t.progress = roadnet::project_on_route(graph_, *t.route, f.latitude, f.longitude, from);
    if (!t.progress) {
      roadnet::RouteProgress at_origin;
      t.progress = at_origin;
    }
    const CorridorPlan plan = plan_corridor(t);
    for (auto& slot : t.corridor) {
      for (const auto& e : plan.entries) {
        if (e.route_index == slot.entry.route_index) slot.entry = e;
      }
    }
  }

  void log_track(const AmbulanceTrack& t, Instant now) {
    const FixRecord* f = t.latest();
    nlohmann::json p{{"ambulance", t.ambulance_id}, {"status", to_string(t.status)}};
    if (f) {
      p["lat"] = f->latitude;
      p["lon"] = f->longitude;
      p["fix_time"] = format_iso8601(f->time);
    }
    if (t.matched) p["matched_node"] = t.matched->node.value;
    log_.append(now, EventKind::TrackUpdated, std::move(p));
  }

  signals::ControllerCommand request(const AmbulanceTrack& t, const CorridorSlot& slot, Instant now) {
    const auto& e = slot.entry;
    log_.append(now, EventKind::PreemptSent,
                {{"ambulance", t.ambulance_id},
                 {"controller", e.controller},
                 {"approach", e.approach.value},
                 {"eta_s", to_seconds(e.eta)},
                 {"source", "auto"}});
    signals::PreemptRequest req{t.ambulance_id, e.approach, now, e.eta, false};
    return signals::ControllerCommand{e.controller, signals::ControllerCommand::Kind::Preempt, req, {}};
  }

  signals::ControllerCommand release(const AmbulanceTrack& t, const CorridorSlot& slot, Instant now,
                                     const char* reason) {
    log_.append(now, EventKind::ReleaseSent,
                {{"ambulance", t.ambulance_id},
                 {"controller", slot.entry.controller},
                 {"reason", reason},
                 {"source", "auto"}});
    return signals::ControllerCommand{slot.entry.controller, signals::ControllerCommand::Kind::Release, {},
                                      t.ambulance_id};
  }

  static nlohmann::json describe(const OperatorAction& action) {
    struct Visitor {
      nlohmann::json operator()(const Preempt& a) const {
        return {{"action", "preempt"}, {"controller", a.controller}, {"approach", a.approach.value}};
      }
      nlohmann::json operator()(const Release& a) const { return {{"action", "release"}, {"controller", a.controller}}; }
      nlohmann::json operator()(const PinRoute& a) const {
        return {{"action", "pin_route"}, {"ambulance", a.ambulance_id}, {"hospital", a.hospital.value}};
      }
    };
    return std::visit(Visitor{}, action);
  }

  Expected<Ok, Rejection> apply(const Preempt& a, std::string_view operator_id, Instant now) {
    if (!bank_.contains(a.controller)) {
      return unexpected(Rejection{Rejection::Kind::UnknownController, "unknown controller " + a.controller});
    }
    if (!bank_.at(a.controller).plan.phase_of(a.approach)) {
      return unexpected(Rejection{Rejection::Kind::UnknownApproach,
                                  "controller " + a.controller + " has no approach " + std::to_string(a.approach.value)});
    }
    const std::string holder = "OP-" + std::string(operator_id);
    if (auto old = operator_holds_.find(a.controller); old != operator_holds_.end()) {
      pending_events_.push_back({EventKind::ReleaseSent,
                                 {{"ambulance", old->second}, {"controller", a.controller}, {"reason", "superseded"},
                                  {"source", "operator"}}});
      outbox_.push_back({a.controller, signals::ControllerCommand::Kind::Release, {}, old->second});
    }
    operator_holds_[a.controller] = holder;
    pending_events_.push_back({EventKind::PreemptSent,
                               {{"ambulance", holder},
                                {"controller", a.controller},
                                {"approach", a.approach.value},
                                {"eta_s", to_seconds(now)},
                                {"source", "operator"}}});
    signals::PreemptRequest req{holder, a.approach, now, now, true};
    outbox_.push_back({a.controller, signals::ControllerCommand::Kind::Preempt, req, {}});
    return Ok{};
  }

  Expected<Ok, Rejection> apply(const Release& a, std::string_view, Instant) {
    if (!bank_.contains(a.controller)) {
      return unexpected(Rejection{Rejection::Kind::UnknownController, "unknown controller " + a.controller});
    }
    const auto& c = bank_.at(a.controller);
    std::optional<std::string> holder = c.state.holder();
    if (!holder) {
      // A preempt issued this tick may still be waiting in the controller inbox.
      for (const auto& cmd : c.inbox) {
        if (cmd.kind == signals::ControllerCommand::Kind::Preempt) holder = cmd.request.ambulance_id;
      }
      for (const auto& cmd : outbox_) {
        if (cmd.controller == a.controller && cmd.kind == signals::ControllerCommand::Kind::Preempt) {
          holder = cmd.request.ambulance_id;
        }
      }
    }
    if (!holder) {
      return unexpected(Rejection{Rejection::Kind::NothingToRelease, "controller " + a.controller + " holds no preemption"});
    }
    std::string source = "operator";
    if (auto op = operator_holds_.find(a.controller); op != operator_holds_.end() && op->second == *holder) {
      operator_holds_.erase(op);
    } else if (auto it = tracks_.find(*holder); it != tracks_.end()) {
      source = "auto";
      for (auto& slot : it->second.corridor) {
        if (slot.entry.controller == a.controller && slot.status == EntryStatus::Requested) slot.status = EntryStatus::Done;
      }
    }
    pending_events_.push_back({EventKind::ReleaseSent,
                               {{"ambulance", *holder}, {"controller", a.controller}, {"reason", "operator"},
                                {"source", source}}});
    outbox_.push_back({a.controller, signals::ControllerCommand::Kind::Release, {}, *holder});
    return Ok{};
  }

  Expected<Ok, Rejection> apply(const PinRoute& a, std::string_view, Instant now) {
    auto it = tracks_.find(a.ambulance_id);
    if (it == tracks_.end()) {
      return unexpected(Rejection{Rejection::Kind::UnknownAmbulance, "unknown ambulance " + a.ambulance_id});
    }
    if (!graph_.hospitals().count(a.hospital)) {
      return unexpected(Rejection{Rejection::Kind::UnknownHospital, "node " + std::to_string(a.hospital.value) +
                                                                        " is not a hospital"});
    }
    AmbulanceTrack& t = it->second;
    // Keep the edge the ambulance is on so the signal at its head stays in the corridor.
    std::vector<NodeId> prefix;
    NodeId from = t.matched ? t.matched->node : a.hospital;
    if (t.route && t.progress && t.progress->edge_index + 1 < t.route->node_sequence.size()) {
      prefix.push_back(t.route->node_sequence[t.progress->edge_index]);
      from = t.route->node_sequence[t.progress->edge_index + 1];
    }
    auto tail = roadnet::shortest_path(graph_, from, a.hospital);
    if (!tail) {
      return unexpected(Rejection{Rejection::Kind::Unreachable, "hospital unreachable from node " +
                                                                    std::to_string(from.value)});
    }
    prefix.insert(prefix.end(), tail->node_sequence.begin(), tail->node_sequence.end());
    auto route = roadnet::route_from_nodes(graph_, prefix);
    pinned_[a.ambulance_id] = a.hospital;
    for (auto& slot : t.corridor) {
      if (slot.status == EntryStatus::Requested) {
        pending_events_.push_back({EventKind::ReleaseSent,
                                   {{"ambulance", t.ambulance_id}, {"controller", slot.entry.controller},
                                    {"reason", "reroute"}, {"source", "auto"}}});
        outbox_.push_back({slot.entry.controller, signals::ControllerCommand::Kind::Release, {}, t.ambulance_id});
      }
    }
    pending_route_ = PendingRoute{t.ambulance_id, std::move(*route), a.hospital};
    reroutes_.push_back(Reroute{t.ambulance_id, a.hospital});
    if (t.status == TrackStatus::Arrived) t.status = TrackStatus::Active;
    (void)now;
    return Ok{};
  }

  // Operator side effects are logged after the OPERATOR_ACTION record itself.
  void flush_operator_events(Instant now) {
    for (auto& ev : pending_events_) log_.append(now, ev.kind, std::move(ev.payload));
    pending_events_.clear();
    if (pending_route_) {
      AmbulanceTrack& t = tracks_.at(pending_route_->ambulance_id);
      install_route(t, std::move(pending_route_->route), pending_route_->hospital, now, "operator");
      pending_route_.reset();
    }
  }

  struct PendingEvent {
    EventKind kind;
    nlohmann::json payload;
  };
  struct PendingRoute {
    std::string ambulance_id;
    roadnet::Route route;
    NodeId hospital;
  };

  const roadnet::RoadGraph& graph_;
  const signals::SignalBank& bank_;
  ControlRoomConfig cfg_;
  EventLog& log_;
  std::map<std::string, AmbulanceTrack> tracks_;
  std::map<std::string, NodeId> pinned_;
  std::map<ControllerId, std::string> operator_holds_;
  std::vector<signals::ControllerCommand> outbox_;
  std::vector<PendingEvent> pending_events_;
  std::optional<PendingRoute> pending_route_;
  std::vector<Reroute> reroutes_;
  std::uint64_t stale_discarded_ = 0;
  std::uint64_t rejected_ = 0;
};

}  // namespace greenwave::control_room
