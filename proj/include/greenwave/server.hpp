#pragma once

// Live run for interactive use: a scheduler thread advances the simulation in
// scaled real time while the HTTP API reads state and applies operator commands.
// One mutex serializes every touch of the engine.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "greenwave/control_room.hpp"
#include "greenwave/sim.hpp"

namespace greenwave::server {

using nlohmann::json;

struct Response {
  int status = 200;
  json body = json::object();
};

inline json error_body(std::string message) { return json{{"error", std::move(message)}}; }

class LiveRun {
 public:
  /// Precondition: validate(scenario) succeeded. `speed` > 0 scales simulated time per wall second.
  LiveRun(sim::Scenario scenario, double speed)
      : sim_(std::make_unique<sim::Simulation>(std::move(scenario))), speed_(speed) {}

  ~LiveRun() { stop(); }

  LiveRun(const LiveRun&) = delete;
  LiveRun& operator=(const LiveRun&) = delete;

  void start() {
    stop_ = false;
    worker_ = std::thread([this] { schedule(); });
  }

  void stop() {
    {
      std::lock_guard lock(wake_mutex_);
      stop_ = true;
    }
    wake_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  /// Advances one tick synchronously (tests and stepping without the scheduler).
  void tick() {
    std::lock_guard lock(mutex_);
    step_locked();
  }

  bool finished() const {
    std::lock_guard lock(mutex_);
    return sim_->done();
  }

  /// Wall time from start() until the run first reached its end.
  std::optional<std::chrono::steady_clock::duration> wall_to_finish() const {
    std::lock_guard lock(mutex_);
    return wall_to_finish_;
  }

  /// Simulated instant at which the run first reached its end.
  std::optional<Instant> finish_time() const {
    std::lock_guard lock(mutex_);
    return finish_time_;
  }

  const EventLog& events() const { return sim_->events(); }

  template <class F>
  auto inspect(F&& f) const {
    std::lock_guard lock(mutex_);
    return f(static_cast<const sim::Simulation&>(*sim_));
  }

  Response ambulances() const {
    std::lock_guard lock(mutex_);
    json out = json::array();
    const auto& room = sim_->control_room();
    for (const auto& spec : sim_->scenario().ambulances) {
      json a{{"id", spec.id}, {"status", "UNSEEN"}, {"last_fix", nullptr}, {"destination", nullptr}, {"eta_s", nullptr}};
      if (const auto* t = room.track(spec.id)) {
        a["status"] = control_room::to_string(t->status);
        if (const auto* f = t->latest()) {
          a["last_fix"] = {{"lat", f->latitude}, {"lon", f->longitude}, {"time", format_iso8601(f->time)},
                           {"sim_time_s", to_seconds(f->sim_time)}};
        }
        if (t->destination) a["destination"] = t->destination->value;
        if (auto eta = t->eta_destination()) a["eta_s"] = to_seconds(*eta);
      }
      out.push_back(std::move(a));
    }
    return {200, out};
  }

  Response signals() const {
    std::lock_guard lock(mutex_);
    json out = json::array();
    for (const auto& [id, c] : sim_->signal_bank().all()) {
      json green = json::array();
      for (ApproachId a : c.state.green()) green.push_back(a.value);
      json queue = json::array();
      for (const auto& r : c.state.queue) queue.push_back(r.ambulance_id);
      const auto cd = signals::countdown(c.state, c.plan);
      out.push_back({{"id", id},
                     {"node", c.node.value},
                     {"mode", signals::to_string(c.state.mode)},
                     {"stage", signals::to_string(c.state.stage)},
                     {"phase", c.state.phase},
                     {"green", green},
                     {"countdown_s", cd ? json(to_seconds(*cd)) : json(nullptr)},
                     {"holder", c.state.holder() ? json(*c.state.holder()) : json(nullptr)},
                     {"queue", queue}});
    }
    return {200, out};
  }

  Response graph() const {
    std::lock_guard lock(mutex_);
    const auto& g = sim_->scenario().graph;
    json nodes = json::array(), edges = json::array(), hospitals = json::array(), intersections = json::array();
    for (const auto& [id, n] : g.nodes()) nodes.push_back({{"id", id.value}, {"lat", n.latitude}, {"lon", n.longitude}});
    for (const auto& e : g.edges()) {
      edges.push_back({{"id", e.id.value}, {"from", e.from.value}, {"to", e.to.value}, {"length_m", e.length_m},
                       {"speed_mps", e.speed_mps}});
    }
    for (const auto& [node, name] : g.hospitals()) hospitals.push_back({{"node", node.value}, {"name", name}});
    for (const auto& [node, ctl] : g.intersections()) intersections.push_back({{"node", node.value}, {"controller", ctl}});
    return {200, json{{"nodes", nodes}, {"edges", edges}, {"hospitals", hospitals}, {"intersections", intersections}}};
  }

  /// Records from `from`; waits up to `wait` for the first new one.
  Response events_since(std::uint64_t from, std::chrono::milliseconds wait) const {
    json out = json::array();
    for (const auto& r : sim_->events().wait_and_read(from, wait)) out.push_back(r.to_json());
    return {200, out};
  }

  Response operator_action(const control_room::OperatorAction& action, const std::string& operator_id) {
    std::lock_guard lock(mutex_);
    auto r = sim_->operator_command(action, operator_id);
    if (!r) return {r.error().http_status(), error_body(r.error().message)};
    return {200, json{{"result", "applied"}}};
  }

 private:
  void step_locked() {
    sim_->tick();
    if (sim_->done() && !finish_time_) {
      finish_time_ = sim_->now();
      wall_to_finish_ = std::chrono::steady_clock::now() - started_;
    }
  }

  void schedule() {
    {
      std::lock_guard lock(mutex_);
      started_ = std::chrono::steady_clock::now();
    }
    const auto dt_wall = std::chrono::duration<double>(to_seconds(sim_->scenario().sim.dt) / speed_);
    std::uint64_t ticks = 0;
    for (;;) {
      const auto due = started_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(dt_wall * (ticks + 1));
      {
        std::unique_lock lock(wake_mutex_);
        if (wake_.wait_until(lock, due, [&] { return stop_; })) return;
      }
      tick();
      ++ticks;
    }
  }

  mutable std::mutex mutex_;
  std::unique_ptr<sim::Simulation> sim_;
  double speed_;
  std::chrono::steady_clock::time_point started_{};
  std::optional<std::chrono::steady_clock::duration> wall_to_finish_;
  std::optional<Instant> finish_time_;
  std::thread worker_;
  std::mutex wake_mutex_;
  std::condition_variable wake_;
  bool stop_ = false;
};

namespace detail {

inline void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline std::string operator_of(const httplib::Request& req) {
  std::string op = req.get_header_value("X-Operator");
  return device::valid_ambulance_id(op) ? op : std::string("console");
}

inline std::optional<std::int64_t> int_field(const httplib::Request& req, const char* key) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object() || !body.contains(key) || !body[key].is_number_integer()) {
    return std::nullopt;
  }
  return body[key].get<std::int64_t>();
}

}  // namespace detail

/// Registers the operator API on `server`. Long-poll wait is capped at 30 s.
inline void install_routes(httplib::Server& server, LiveRun& run) {
  using detail::reply;
  server.Get("/api/ambulances", [&](const httplib::Request&, httplib::Response& res) { reply(res, run.ambulances()); });
  server.Get("/api/signals", [&](const httplib::Request&, httplib::Response& res) { reply(res, run.signals()); });
  server.Get("/api/graph", [&](const httplib::Request&, httplib::Response& res) { reply(res, run.graph()); });
  server.Get("/api/events", [&](const httplib::Request& req, httplib::Response& res) {
    std::uint64_t from = 0;
    long wait_ms = 10000;
    try {
      if (req.has_param("from")) from = std::stoull(req.get_param_value("from"));
      if (req.has_param("wait_ms")) wait_ms = std::clamp(std::stol(req.get_param_value("wait_ms")), 0L, 30000L);
    } catch (const std::exception&) {
      reply(res, {400, error_body("from and wait_ms must be non-negative integers")});
      return;
    }
    reply(res, run.events_since(from, std::chrono::milliseconds{wait_ms}));
  });
  server.Post(R"(/api/controllers/([^/]+)/preempt)", [&](const httplib::Request& req, httplib::Response& res) {
    auto approach = detail::int_field(req, "approach");
    if (!approach) {
      reply(res, {400, error_body("body must be {\"approach\": <node id>}")});
      return;
    }
    reply(res, run.operator_action(control_room::Preempt{req.matches[1], ApproachId{*approach}}, detail::operator_of(req)));
  });
  server.Post(R"(/api/controllers/([^/]+)/release)", [&](const httplib::Request& req, httplib::Response& res) {
    reply(res, run.operator_action(control_room::Release{req.matches[1]}, detail::operator_of(req)));
  });
  server.Post(R"(/api/ambulances/([^/]+)/route)", [&](const httplib::Request& req, httplib::Response& res) {
    auto hospital = detail::int_field(req, "hospital");
    if (!hospital) {
      reply(res, {400, error_body("body must be {\"hospital\": <node id>}")});
      return;
    }
    reply(res, run.operator_action(control_room::PinRoute{req.matches[1], NodeId{*hospital}}, detail::operator_of(req)));
  });
}

}  // namespace greenwave::server
