#pragma once

#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <string_view>

#include "json.hpp"

#include "greenwave/expected.hpp"
#include "greenwave/sim.hpp"

namespace greenwave::scenario {

using nlohmann::json;

/// Scenario file schema (draft-07 subset). docs/scenario.schema.json mirrors it.
inline constexpr std::string_view kSchema = R"JSON({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "greenwave scenario",
  "type": "object",
  "additionalProperties": false,
  "required": ["graph", "ambulances"],
  "properties": {
    "name": {"type": "string"},
    "start_utc": {"type": "string", "pattern": "^[0-9]{4}-[0-9]{2}-[0-9]{2}T[0-9]{2}:[0-9]{2}:[0-9]{2}Z$"},
    "graph": {
      "type": "object",
      "additionalProperties": false,
      "required": ["nodes", "edges", "hospitals"],
      "properties": {
        "nodes": {
          "type": "array", "minItems": 1,
          "items": {
            "type": "object", "additionalProperties": false,
            "required": ["id", "lat", "lon"],
            "properties": {
              "id": {"type": "integer"},
              "lat": {"type": "number", "minimum": -90, "maximum": 90},
              "lon": {"type": "number", "minimum": -180, "maximum": 180}
            }
          }
        },
        "edges": {
          "type": "array",
          "items": {
            "type": "object", "additionalProperties": false,
            "required": ["from", "to", "length_m", "speed_mps"],
            "properties": {
              "from": {"type": "integer"},
              "to": {"type": "integer"},
              "length_m": {"type": "number", "exclusiveMinimum": 0},
              "speed_mps": {"type": "number", "exclusiveMinimum": 0}
            }
          }
        },
        "hospitals": {
          "type": "array", "minItems": 1,
          "items": {
            "type": "object", "additionalProperties": false,
            "required": ["node"],
            "properties": {"node": {"type": "integer"}, "name": {"type": "string"}}
          }
        }
      }
    },
    "signals": {
      "type": "array",
      "items": {
        "type": "object", "additionalProperties": false,
        "required": ["node", "controller", "plan"],
        "properties": {
          "node": {"type": "integer"},
          "controller": {"type": "string", "minLength": 1},
          "offset_s": {"type": "number", "minimum": 0},
          "plan": {
            "type": "object", "additionalProperties": false,
            "required": ["phases"],
            "properties": {
              "phases": {
                "type": "array", "minItems": 1,
                "items": {
                  "type": "object", "additionalProperties": false,
                  "required": ["green", "duration_s"],
                  "properties": {
                    "green": {"type": "array", "minItems": 1, "items": {"type": "integer"}},
                    "duration_s": {"type": "number", "exclusiveMinimum": 0}
                  }
                }
              },
              "yellow_s": {"type": "number", "exclusiveMinimum": 0},
              "all_red_s": {"type": "number", "exclusiveMinimum": 0},
              "conflicts": {
                "type": "array",
                "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": {"type": "integer"}}
              }
            }
          }
        }
      }
    },
    "ambulances": {
      "type": "array", "minItems": 1,
      "items": {
        "type": "object", "additionalProperties": false,
        "required": ["id", "start_node"],
        "properties": {
          "id": {"type": "string", "pattern": "^[A-Za-z0-9_-]{1,16}$"},
          "start_node": {"type": "integer"},
          "hospital": {"type": "integer"},
          "depart_s": {"type": "number", "minimum": 0},
          "number": {"type": "string", "pattern": "^\\+?[0-9]{3,15}$"}
        }
      }
    },
    "sim": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"type": "string", "enum": ["baseline", "auto", "operator"]},
        "dt_s": {"type": "number", "exclusiveMinimum": 0},
        "horizon_s": {"type": "number", "exclusiveMinimum": 0},
        "settle_s": {"type": "number", "minimum": 0},
        "queue_discharge_s": {"type": "number", "minimum": 0},
        "modem_send_s": {"type": "number", "minimum": 0},
        "sms": {
          "type": "object", "additionalProperties": false,
          "properties": {
            "latency_min_s": {"type": "number", "minimum": 0},
            "latency_max_s": {"type": "number", "minimum": 0},
            "loss_probability": {"type": "number", "minimum": 0, "maximum": 1}
          }
        },
        "initial_queues": {
          "type": "array",
          "items": {
            "type": "object", "additionalProperties": false,
            "required": ["node", "approach", "vehicles"],
            "properties": {
              "node": {"type": "integer"},
              "approach": {"type": "integer"},
              "vehicles": {"type": "integer", "minimum": 0}
            }
          }
        }
      }
    },
    "device": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "parse_window_s": {"type": "number", "exclusiveMinimum": 0},
        "send_interval_s": {"type": "number", "exclusiveMinimum": 0},
        "single_shot": {"type": "boolean"}
      }
    },
    "control_room": {
      "type": "object", "additionalProperties": false,
      "properties": {
        "lead_time_s": {"type": "number", "minimum": 0},
        "passage_margin_s": {"type": "number", "minimum": 0},
        "number": {"type": "string", "pattern": "^\\+?[0-9]{3,15}$"},
        "hospital_number": {"type": "string", "pattern": "^\\+?[0-9]{3,15}$"}
      }
    },
    "operator_script": {
      "type": "array",
      "items": {
        "type": "object", "additionalProperties": false,
        "required": ["at_s", "action"],
        "properties": {
          "at_s": {"type": "number", "minimum": 0},
          "operator": {"type": "string", "pattern": "^[A-Za-z0-9_-]{1,16}$"},
          "action": {"type": "string", "enum": ["preempt", "release", "pin_route"]},
          "controller": {"type": "string"},
          "approach": {"type": "integer"},
          "ambulance": {"type": "string"},
          "hospital": {"type": "integer"}
        }
      }
    }
  }
})JSON";

inline const json& schema() {
  static const json s = json::parse(kSchema);
  return s;
}

/// Validates `doc` against the subset of JSON Schema used by kSchema.
/// Returns the first violation as "<json pointer>: <problem>".
class SchemaValidator {
 public:
  static Expected<Ok, std::string> check(const json& doc, const json& sch = schema()) {
    std::string err;
    if (!visit(doc, sch, "", err)) return unexpected(std::move(err));
    return Ok{};
  }

 private:
  static bool type_matches(const json& v, const std::string& type) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "integer") return v.is_number_integer();
    if (type == "number") return v.is_number();
    return false;
  }

  static bool visit(const json& v, const json& s, const std::string& at, std::string& err) {
    auto fail = [&](std::string what) {
      err = (at.empty() ? "/" : at) + ": " + what;
      return false;
    };
    if (s.contains("type") && !type_matches(v, s["type"].get<std::string>())) {
      return fail("expected " + s["type"].get<std::string>());
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s["enum"]) found = found || e == v;
      if (!found) return fail("value " + v.dump() + " not allowed");
    }
    if (v.is_number()) {
      const double x = v.get<double>();
      if (s.contains("minimum") && x < s["minimum"].get<double>()) return fail("below minimum");
      if (s.contains("maximum") && x > s["maximum"].get<double>()) return fail("above maximum");
      if (s.contains("exclusiveMinimum") && !(x > s["exclusiveMinimum"].get<double>())) {
        return fail("must be greater than " + s["exclusiveMinimum"].dump());
      }
    }
    if (v.is_string()) {
      const auto& str = v.get_ref<const std::string&>();
      if (s.contains("minLength") && str.size() < s["minLength"].get<std::size_t>()) return fail("string too short");
      if (s.contains("pattern") && !std::regex_match(str, std::regex(s["pattern"].get<std::string>()))) {
        return fail("\"" + str + "\" does not match " + s["pattern"].get<std::string>());
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) return fail("too few items");
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) return fail("too many items");
      if (s.contains("items")) {
        for (std::size_t i = 0; i < v.size(); ++i) {
          if (!visit(v[i], s["items"], at + "/" + std::to_string(i), err)) return false;
        }
      }
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& r : s["required"]) {
          if (!v.contains(r.get<std::string>())) return fail("missing required field \"" + r.get<std::string>() + "\"");
        }
      }
      const json props = s.value("properties", json::object());
      for (const auto& [key, value] : v.items()) {
        if (props.contains(key)) {
          if (!visit(value, props[key], at + "/" + key, err)) return false;
        } else if (s.contains("additionalProperties") && s["additionalProperties"] == false) {
          return fail("unknown field \"" + key + "\"");
        }
      }
    }
    return true;
  }
};

namespace detail {
inline Duration secs(const json& obj, const char* key, Duration fallback) {
  if (!obj.contains(key)) return fallback;
  return Duration{static_cast<std::int64_t>(std::llround(obj[key].get<double>() * 1000.0))};
}
}  // namespace detail

/// Builds a scenario from a parsed document. Schema first, then semantic validation.
inline Expected<sim::Scenario, sim::ScenarioError> from_json(const json& doc) {
  using sim::ScenarioError;
  if (auto ok = SchemaValidator::check(doc); !ok) return unexpected(ScenarioError{ok.error()});
  using detail::secs;
  sim::Scenario sc;
  sc.name = doc.value("name", std::string("scenario"));
  if (doc.contains("start_utc")) {
    auto t = parse_iso8601(doc["start_utc"].get<std::string>());
    if (!t) return unexpected(ScenarioError{"/start_utc: not a valid UTC timestamp"});
    sc.start_utc = *t;
  }

  const json& g = doc["graph"];
  for (std::size_t i = 0; i < g["nodes"].size(); ++i) {
    const json& n = g["nodes"][i];
    const NodeId id{n["id"].get<std::int64_t>()};
    if (!sc.graph.add_node(id, n["lat"].get<double>(), n["lon"].get<double>())) {
      return unexpected(ScenarioError{"/graph/nodes/" + std::to_string(i) + ": duplicate node " + std::to_string(id.value)});
    }
  }
  for (std::size_t i = 0; i < g["edges"].size(); ++i) {
    const json& e = g["edges"][i];
    const NodeId from{e["from"].get<std::int64_t>()};
    const NodeId to{e["to"].get<std::int64_t>()};
    if (!sc.graph.add_edge(from, to, e["length_m"].get<double>(), e["speed_mps"].get<double>())) {
      return unexpected(ScenarioError{"/graph/edges/" + std::to_string(i) + ": edge " + std::to_string(from.value) +
                                      "->" + std::to_string(to.value) + " has an unknown endpoint, is a self loop or a duplicate"});
    }
  }
  for (std::size_t i = 0; i < g["hospitals"].size(); ++i) {
    const json& h = g["hospitals"][i];
    const NodeId node{h["node"].get<std::int64_t>()};
    if (!sc.graph.add_hospital(node, h.value("name", "hospital-" + std::to_string(node.value)))) {
      return unexpected(ScenarioError{"/graph/hospitals/" + std::to_string(i) + ": node " + std::to_string(node.value) +
                                      " is unknown or already a hospital"});
    }
  }

  for (const auto& s : doc.value("signals", json::array())) {
    sim::SignalSpec spec;
    spec.node = NodeId{s["node"].get<std::int64_t>()};
    spec.controller = s["controller"].get<std::string>();
    spec.offset = secs(s, "offset_s", Duration{0});
    const json& p = s["plan"];
    for (const auto& ph : p["phases"]) {
      signals::Phase phase;
      for (const auto& a : ph["green"]) phase.green.push_back(ApproachId{a.get<std::int64_t>()});
      phase.green_time = secs(ph, "duration_s", Duration{30000});
      spec.plan.phases.push_back(std::move(phase));
    }
    spec.plan.yellow = secs(p, "yellow_s", Duration{3000});
    spec.plan.all_red = secs(p, "all_red_s", Duration{1000});
    if (p.contains("conflicts")) {
      for (const auto& c : p["conflicts"]) {
        spec.plan.add_conflict(ApproachId{c[0].get<std::int64_t>()}, ApproachId{c[1].get<std::int64_t>()});
      }
    } else {
      spec.plan.derive_conflicts();
    }
    if (!sc.graph.add_intersection(spec.node, spec.controller)) {
      return unexpected(ScenarioError{"signal " + spec.controller + ": unknown node or node already signalized"});
    }
    sc.signals.push_back(std::move(spec));
  }

  const auto& ambulances = doc["ambulances"];
  for (std::size_t i = 0; i < ambulances.size(); ++i) {
    const auto& a = ambulances[i];
    sim::AmbulanceSpec spec;
    spec.id = a["id"].get<std::string>();
    spec.start = NodeId{a["start_node"].get<std::int64_t>()};
    if (a.contains("hospital")) spec.hospital = NodeId{a["hospital"].get<std::int64_t>()};
    spec.depart = secs(a, "depart_s", Duration{0});
    spec.number = a.value("number", sim::default_device_number(i));
    sc.ambulances.push_back(std::move(spec));
  }

  const json s = doc.value("sim", json::object());
  sc.sim.seed = s.value("seed", std::uint64_t{7});
  if (s.contains("mode")) sc.sim.mode = *sim::parse_mode(s["mode"].get<std::string>());
  sc.sim.dt = secs(s, "dt_s", sc.sim.dt);
  sc.sim.horizon = secs(s, "horizon_s", sc.sim.horizon);
  sc.sim.settle_grace = secs(s, "settle_s", sc.sim.settle_grace);
  sc.sim.queue_discharge = secs(s, "queue_discharge_s", sc.sim.queue_discharge);
  sc.sim.modem_send_time = secs(s, "modem_send_s", sc.sim.modem_send_time);
  const json sms = s.value("sms", json::object());
  sc.sim.sms.latency_min = secs(sms, "latency_min_s", sc.sim.sms.latency_min);
  sc.sim.sms.latency_max = secs(sms, "latency_max_s", sc.sim.sms.latency_max);
  sc.sim.sms.loss_probability = sms.value("loss_probability", 0.0);
  for (const auto& q : s.value("initial_queues", json::array())) {
    sc.sim.initial_queues.push_back(sim::QueueSpec{NodeId{q["node"].get<std::int64_t>()},
                                                   ApproachId{q["approach"].get<std::int64_t>()},
                                                   q["vehicles"].get<int>()});
  }

  const json d = doc.value("device", json::object());
  sc.device.parse_window = secs(d, "parse_window_s", sc.device.parse_window);
  sc.device.send_interval = secs(d, "send_interval_s", sc.device.send_interval);
  sc.device.single_shot = d.value("single_shot", false);

  const json c = doc.value("control_room", json::object());
  sc.control_room.lead_time = secs(c, "lead_time_s", sc.control_room.lead_time);
  sc.control_room.passage_margin = secs(c, "passage_margin_s", sc.control_room.passage_margin);
  sc.control_room.number = c.value("number", sc.control_room.number);
  sc.control_room.hospital_number = c.value("hospital_number", sc.control_room.hospital_number);

  const auto& script = doc.value("operator_script", json::array());
  for (std::size_t i = 0; i < script.size(); ++i) {
    const auto& o = script[i];
    const std::string where = "/operator_script/" + std::to_string(i);
    sim::ScriptedAction act;
    act.at = Instant{secs(o, "at_s", Duration{0})};
    act.operator_id = o.value("operator", std::string("script"));
    const std::string kind = o["action"].get<std::string>();
    auto need = [&](const char* key) { return o.contains(key); };
    if (kind == "preempt") {
      if (!need("controller") || !need("approach")) return unexpected(ScenarioError{where + ": preempt needs controller and approach"});
      act.action = control_room::Preempt{o["controller"].get<std::string>(), ApproachId{o["approach"].get<std::int64_t>()}};
    } else if (kind == "release") {
      if (!need("controller")) return unexpected(ScenarioError{where + ": release needs controller"});
      act.action = control_room::Release{o["controller"].get<std::string>()};
    } else {
      if (!need("ambulance") || !need("hospital")) return unexpected(ScenarioError{where + ": pin_route needs ambulance and hospital"});
      act.action = control_room::PinRoute{o["ambulance"].get<std::string>(), NodeId{o["hospital"].get<std::int64_t>()}};
    }
    sc.operator_script.push_back(std::move(act));
  }

  if (auto ok = sim::validate(sc); !ok) return unexpected(ok.error());
  return sc;
}

inline Expected<sim::Scenario, sim::ScenarioError> from_string(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) return unexpected(sim::ScenarioError{"scenario is not valid JSON"});
  return from_json(doc);
}

enum class LoadFailure { Io, Invalid };

struct LoadError {
  LoadFailure kind;
  std::string reason;
};

inline Expected<sim::Scenario, LoadError> load_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) return unexpected(LoadError{LoadFailure::Io, "cannot read " + path});
  std::stringstream buf;
  buf << f.rdbuf();
  auto sc = from_string(buf.str());
  if (!sc) return unexpected(LoadError{LoadFailure::Invalid, sc.error().reason});
  return std::move(*sc);
}

/// Inverse of from_json for the fields the model carries.
inline json to_json(const sim::Scenario& sc) {
  auto s = [](Duration d) { return to_seconds(d); };
  json doc;
  doc["name"] = sc.name;
  doc["start_utc"] = format_iso8601(sc.start_utc);
  json nodes = json::array(), edges = json::array(), hospitals = json::array();
  for (const auto& [id, n] : sc.graph.nodes()) nodes.push_back({{"id", id.value}, {"lat", n.latitude}, {"lon", n.longitude}});
  for (const auto& e : sc.graph.edges()) {
    edges.push_back({{"from", e.from.value}, {"to", e.to.value}, {"length_m", e.length_m}, {"speed_mps", e.speed_mps}});
  }
  for (const auto& [node, name] : sc.graph.hospitals()) hospitals.push_back({{"node", node.value}, {"name", name}});
  doc["graph"] = {{"nodes", nodes}, {"edges", edges}, {"hospitals", hospitals}};
  json sigs = json::array();
  for (const auto& sig : sc.signals) {
    json phases = json::array();
    for (const auto& p : sig.plan.phases) {
      json green = json::array();
      for (auto a : p.green) green.push_back(a.value);
      phases.push_back({{"green", green}, {"duration_s", s(p.green_time)}});
    }
    json conflicts = json::array();
    for (const auto& [a, b] : sig.plan.conflicts) conflicts.push_back({a.value, b.value});
    sigs.push_back({{"node", sig.node.value},
                    {"controller", sig.controller},
                    {"offset_s", s(sig.offset)},
                    {"plan", {{"phases", phases}, {"yellow_s", s(sig.plan.yellow)}, {"all_red_s", s(sig.plan.all_red)},
                              {"conflicts", conflicts}}}});
  }
  doc["signals"] = sigs;
  json ambs = json::array();
  for (const auto& a : sc.ambulances) {
    json j{{"id", a.id}, {"start_node", a.start.value}, {"depart_s", s(a.depart)}, {"number", a.number}};
    if (a.hospital) j["hospital"] = a.hospital->value;
    ambs.push_back(j);
  }
  doc["ambulances"] = ambs;
  json queues = json::array();
  for (const auto& q : sc.sim.initial_queues) {
    queues.push_back({{"node", q.node.value}, {"approach", q.approach.value}, {"vehicles", q.vehicles}});
  }
  doc["sim"] = {{"seed", sc.sim.seed},
                {"mode", sim::to_string(sc.sim.mode)},
                {"dt_s", s(sc.sim.dt)},
                {"horizon_s", s(sc.sim.horizon)},
                {"settle_s", s(sc.sim.settle_grace)},
                {"queue_discharge_s", s(sc.sim.queue_discharge)},
                {"modem_send_s", s(sc.sim.modem_send_time)},
                {"sms",
                 {{"latency_min_s", s(sc.sim.sms.latency_min)},
                  {"latency_max_s", s(sc.sim.sms.latency_max)},
                  {"loss_probability", sc.sim.sms.loss_probability}}},
                {"initial_queues", queues}};
  doc["device"] = {{"parse_window_s", s(sc.device.parse_window)},
                   {"send_interval_s", s(sc.device.send_interval)},
                   {"single_shot", sc.device.single_shot}};
  doc["control_room"] = {{"lead_time_s", s(sc.control_room.lead_time)},
                         {"passage_margin_s", s(sc.control_room.passage_margin)},
                         {"number", sc.control_room.number},
                         {"hospital_number", sc.control_room.hospital_number}};
  json script = json::array();
  for (const auto& o : sc.operator_script) {
    json j{{"at_s", to_seconds(o.at)}, {"operator", o.operator_id}};
    std::visit(
        [&](const auto& a) {
          using A = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<A, control_room::Preempt>) {
            j["action"] = "preempt";
            j["controller"] = a.controller;
            j["approach"] = a.approach.value;
          } else if constexpr (std::is_same_v<A, control_room::Release>) {
            j["action"] = "release";
            j["controller"] = a.controller;
          } else {
            j["action"] = "pin_route";
            j["ambulance"] = a.ambulance_id;
            j["hospital"] = a.hospital.value;
          }
        },
        o.action);
    script.push_back(j);
  }
  doc["operator_script"] = script;
  return doc;
}

}  // namespace greenwave::scenario
