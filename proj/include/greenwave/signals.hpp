#pragma once

// Fixed-time signal controller with an emergency preemption protocol.
//
// Mode machine:
//   NORMAL      cycles phases: green -> yellow -> all-red -> next phase
//   TO_PREEMPT  finishes clearance (yellow, all-red) then greens the target
//   PREEMPT     holds one phase's green set for the active request
//   RECOVER     clears the held set, then NORMAL restarts at phase 0
//
// Every green set a controller shows is some phase's green set, and a set only
// replaces another after a full clearance, so conflicting greens cannot occur.

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "greenwave/expected.hpp"
#include "greenwave/roadnet.hpp"
#include "greenwave/time.hpp"

namespace greenwave::signals {

enum class Indication { Red, Yellow, Green };
enum class Mode { Normal, ToPreempt, Preempt, Recover };
enum class Stage { Green, Yellow, AllRed };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Normal: return "NORMAL";
    case Mode::ToPreempt: return "TO_PREEMPT";
    case Mode::Preempt: return "PREEMPT";
    case Mode::Recover: return "RECOVER";
  }
  return "?";
}

inline const char* to_string(Stage s) {
  switch (s) {
    case Stage::Green: return "GREEN";
    case Stage::Yellow: return "YELLOW";
    case Stage::AllRed: return "ALL_RED";
  }
  return "?";
}

enum class SignalError { UnknownApproach, NoSuchRequest, InvalidPlan };

inline const char* to_string(SignalError e) {
  switch (e) {
    case SignalError::UnknownApproach: return "UnknownApproach";
    case SignalError::NoSuchRequest: return "NoSuchRequest";
    case SignalError::InvalidPlan: return "InvalidPlan";
  }
  return "?";
}

struct Phase {
  std::vector<ApproachId> green;
  Duration green_time{30000};
};

struct PhasePlan {
  std::vector<Phase> phases;
  Duration yellow{3000};
  Duration all_red{1000};
  std::set<std::pair<ApproachId, ApproachId>> conflicts;  // stored as (low, high)

  static std::pair<ApproachId, ApproachId> ordered(ApproachId a, ApproachId b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }

  void add_conflict(ApproachId a, ApproachId b) { conflicts.insert(ordered(a, b)); }

  bool conflicting(ApproachId a, ApproachId b) const {
    return a != b && conflicts.count(ordered(a, b)) != 0;
  }

  std::vector<ApproachId> approaches() const {
    std::set<ApproachId> all;
    for (const auto& p : phases) all.insert(p.green.begin(), p.green.end());
    return {all.begin(), all.end()};
  }

  std::optional<std::size_t> phase_of(ApproachId a) const {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      if (std::find(phases[i].green.begin(), phases[i].green.end(), a) != phases[i].green.end()) return i;
    }
    return std::nullopt;
  }

  Duration cycle() const {
    Duration total{0};
    for (const auto& p : phases) total += p.green_time + yellow + all_red;
    return total;
  }

  /// Fills the conflict table with every pair of approaches that never share a phase.
  void derive_conflicts() {
    const auto all = approaches();
    for (std::size_t i = 0; i < all.size(); ++i) {
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        bool together = false;
        for (const auto& p : phases) {
          const bool hi = std::find(p.green.begin(), p.green.end(), all[i]) != p.green.end();
          const bool hj = std::find(p.green.begin(), p.green.end(), all[j]) != p.green.end();
          together = together || (hi && hj);
        }
        if (!together) add_conflict(all[i], all[j]);
      }
    }
  }

  bool valid() const {
    if (phases.empty() || yellow.count() <= 0 || all_red.count() <= 0) return false;
    for (const auto& p : phases) {
      if (p.green.empty() || p.green_time.count() <= 0) return false;
      for (std::size_t i = 0; i < p.green.size(); ++i) {
        for (std::size_t j = i + 1; j < p.green.size(); ++j) {
          if (p.green[i] == p.green[j] || conflicting(p.green[i], p.green[j])) return false;
        }
      }
    }
    return true;
  }
};

/// Default two-phase plan: `ns` green, then `ew` green.
inline PhasePlan two_phase_plan(std::vector<ApproachId> ns, std::vector<ApproachId> ew,
                                Duration green = Duration{30000}, Duration yellow = Duration{3000},
                                Duration all_red = Duration{1000}) {
  PhasePlan plan;
  plan.phases.push_back(Phase{std::move(ns), green});
  plan.phases.push_back(Phase{std::move(ew), green});
  plan.yellow = yellow;
  plan.all_red = all_red;
  plan.derive_conflicts();
  return plan;
}

struct PreemptRequest {
  std::string ambulance_id;
  ApproachId approach;
  Instant requested_at{};
  Instant eta{};
  bool manual = false;  // operator requests sort ahead of automatic ones

  auto priority_key() const { return std::tuple(!manual, eta, ambulance_id); }
};

struct ControllerState {
  Mode mode = Mode::Normal;
  std::size_t phase = 0;
  Stage stage = Stage::Green;
  Duration stage_elapsed{0};
  std::vector<ApproachId> lit;     // green set in Stage::Green, yellow set in Stage::Yellow
  std::vector<ApproachId> target;  // set to green once TO_PREEMPT clearance ends
  Duration green_elapsed{0};       // time the current green set has been green
  std::optional<PreemptRequest> active;
  std::vector<PreemptRequest> queue;  // ascending priority_key
  std::map<ApproachId, Duration> green_total;

  bool contains_lit(ApproachId a) const { return std::find(lit.begin(), lit.end(), a) != lit.end(); }

  Indication indication(ApproachId a) const {
    if (!contains_lit(a)) return Indication::Red;
    if (stage == Stage::Green) return Indication::Green;
    if (stage == Stage::Yellow) return Indication::Yellow;
    return Indication::Red;
  }

  std::vector<ApproachId> green() const { return stage == Stage::Green ? lit : std::vector<ApproachId>{}; }

  std::optional<std::string> holder() const {
    if (!active) return std::nullopt;
    return active->ambulance_id;
  }
};

inline Duration stage_length(const ControllerState& s, const PhasePlan& plan) {
  switch (s.stage) {
    case Stage::Green: return plan.phases[s.phase].green_time;
    case Stage::Yellow: return plan.yellow;
    case Stage::AllRed: return plan.all_red;
  }
  return Duration{0};
}

/// Time left in the current timed stage; nullopt while a preemption hold lasts.
inline std::optional<Duration> countdown(const ControllerState& s, const PhasePlan& plan) {
  if (s.mode == Mode::Preempt) return std::nullopt;
  return stage_length(s, plan) - s.stage_elapsed;
}

/// Fixed-time state `offset` into the cycle, starting from phase 0 green.
inline ControllerState step(ControllerState s, const PhasePlan& plan, Duration dt);

inline ControllerState initial_state(const PhasePlan& plan, Duration offset = Duration{0}) {
  ControllerState s;
  s.lit = plan.phases.front().green;
  for (ApproachId a : plan.approaches()) s.green_total[a] = Duration{0};
  if (offset.count() > 0) {
    s = step(std::move(s), plan, offset % plan.cycle());
    for (auto& [a, t] : s.green_total) t = Duration{0};
  }
  return s;
}

namespace detail {

inline std::vector<ApproachId> target_set(const PhasePlan& plan, ApproachId a) {
  return plan.phases[*plan.phase_of(a)].green;
}

inline void enter_hold(ControllerState& s) {
  s.mode = Mode::Preempt;
  s.stage = Stage::Green;
  s.stage_elapsed = Duration{0};
}

// Start clearing whatever is lit; green turns yellow, yellow and all-red continue.
inline void begin_clearance(ControllerState& s, Mode mode) {
  s.mode = mode;
  if (s.stage == Stage::Green) {
    s.stage = Stage::Yellow;
    s.stage_elapsed = Duration{0};
    s.green_elapsed = Duration{0};
  }
}

// Makes `req` the active request, holding or clearing as its approach demands.
inline void serve(ControllerState& s, const PhasePlan& plan, PreemptRequest req) {
  const ApproachId a = req.approach;
  s.active = std::move(req);
  if (s.stage == Stage::Green && s.contains_lit(a)) {
    enter_hold(s);
    s.target.clear();
    return;
  }
  s.target = target_set(plan, a);
  begin_clearance(s, Mode::ToPreempt);
}

inline void enqueue(ControllerState& s, PreemptRequest req) {
  auto pos = std::upper_bound(s.queue.begin(), s.queue.end(), req,
                              [](const PreemptRequest& x, const PreemptRequest& y) {
                                return x.priority_key() < y.priority_key();
                              });
  s.queue.insert(pos, std::move(req));
}

}  // namespace detail

inline ControllerState step(ControllerState s, const PhasePlan& plan, Duration dt) {
  while (dt.count() > 0) {
    if (s.mode == Mode::Preempt) {
      for (ApproachId a : s.lit) s.green_total[a] += dt;
      s.green_elapsed += dt;
      s.stage_elapsed += dt;
      return s;
    }
    const Duration left = stage_length(s, plan) - s.stage_elapsed;
    const Duration used = std::min(left, dt);
    if (s.stage == Stage::Green) {
      for (ApproachId a : s.lit) s.green_total[a] += used;
      s.green_elapsed += used;
    }
    s.stage_elapsed += used;
    dt -= used;
    if (s.stage_elapsed < stage_length(s, plan)) break;

    s.stage_elapsed = Duration{0};
    switch (s.stage) {
      case Stage::Green:
        s.stage = Stage::Yellow;
        s.green_elapsed = Duration{0};
        break;
      case Stage::Yellow:
        s.stage = Stage::AllRed;
        s.lit.clear();
        break;
      case Stage::AllRed:
        s.stage = Stage::Green;
        s.green_elapsed = Duration{0};
        if (s.mode == Mode::Normal) {
          s.phase = (s.phase + 1) % plan.phases.size();
          s.lit = plan.phases[s.phase].green;
        } else if (s.mode == Mode::ToPreempt) {
          s.lit = s.target;
          s.target.clear();
          detail::enter_hold(s);
        } else {  // Recover
          s.mode = Mode::Normal;
          s.phase = 0;
          s.lit = plan.phases[0].green;
        }
        break;
    }
  }
  return s;
}

/// Queues or serves a preemption request. A live hold is never cut short; a
/// request waiting on clearance yields to one with a smaller priority key.
inline Expected<ControllerState, SignalError> request_preempt(ControllerState s, const PhasePlan& plan,
                                                              PreemptRequest req) {
  if (!plan.phase_of(req.approach)) return unexpected(SignalError::UnknownApproach);

  // A repeated request from the same ambulance refreshes its queued entry.
  if (s.active && s.active->ambulance_id == req.ambulance_id) return s;
  std::erase_if(s.queue, [&](const PreemptRequest& q) { return q.ambulance_id == req.ambulance_id; });

  switch (s.mode) {
    case Mode::Normal:
    case Mode::Recover:
      detail::serve(s, plan, std::move(req));
      break;
    case Mode::ToPreempt:
      if (req.priority_key() < s.active->priority_key()) {
        detail::enqueue(s, std::move(*s.active));
        s.active = std::move(req);
        s.target = detail::target_set(plan, s.active->approach);
      } else {
        detail::enqueue(s, std::move(req));
      }
      break;
    case Mode::Preempt:
      detail::enqueue(s, std::move(req));
      break;
  }
  return s;
}

/// Ends `ambulance_id`'s hold (or drops its queued request). The next queued
/// request is served; otherwise the controller recovers to phase 0.
inline Expected<ControllerState, SignalError> release_preempt(ControllerState s, const PhasePlan& plan,
                                                              std::string_view ambulance_id) {
  auto queued = std::find_if(s.queue.begin(), s.queue.end(),
                             [&](const PreemptRequest& q) { return q.ambulance_id == ambulance_id; });
  if (queued != s.queue.end()) {
    s.queue.erase(queued);
    return s;
  }
  if (!s.active || s.active->ambulance_id != ambulance_id) return unexpected(SignalError::NoSuchRequest);
  s.active.reset();
  if (!s.queue.empty()) {
    PreemptRequest next = std::move(s.queue.front());
    s.queue.erase(s.queue.begin());
    if (s.mode == Mode::ToPreempt) {
      s.active = std::move(next);
      s.target = detail::target_set(plan, s.active->approach);
    } else {
      detail::serve(s, plan, std::move(next));
    }
    return s;
  }
  s.target.clear();
  detail::begin_clearance(s, Mode::Recover);
  return s;
}

struct ControllerCommand {
  enum class Kind { Preempt, Release };
  ControllerId controller;
  Kind kind = Kind::Preempt;
  PreemptRequest request;  // Preempt
  std::string ambulance_id;  // Release
};

/// One signalized intersection: its plan, live state and pending commands.
struct Controller {
  ControllerId id;
  NodeId node;
  PhasePlan plan;
  ControllerState state;
  std::deque<ControllerCommand> inbox;
};

/// Observable change, reported once per controller per tick.
struct SignalChange {
  ControllerId controller;
  const ControllerState* state;
};

/// All controllers of a scenario. Commands are applied in arrival order per
/// controller, then every controller advances by the tick duration.
class SignalBank {
 public:
  void add(Controller c) {
    const ControllerId id = c.id;
    controllers_.emplace(id, std::move(c));
  }

  bool contains(const ControllerId& id) const { return controllers_.count(id) != 0; }
  const Controller& at(const ControllerId& id) const { return controllers_.at(id); }
  const std::map<ControllerId, Controller>& all() const { return controllers_; }

  void enqueue(ControllerCommand cmd) { controllers_.at(cmd.controller).inbox.push_back(std::move(cmd)); }

  struct CommandFailure {
    ControllerCommand command;
    SignalError error;
  };

  /// Applies queued commands and advances every controller by `dt`. `on_change`
  /// sees each controller whose mode, stage, lit set or holder changed.
  template <class OnChange>
  std::vector<CommandFailure> advance(Duration dt, OnChange&& on_change) {
    std::vector<CommandFailure> failures;
    for (auto& [id, c] : controllers_) {
      const auto before = fingerprint(c.state);
      while (!c.inbox.empty()) {
        ControllerCommand cmd = std::move(c.inbox.front());
        c.inbox.pop_front();
        auto next = cmd.kind == ControllerCommand::Kind::Preempt
                        ? request_preempt(c.state, c.plan, cmd.request)
                        : release_preempt(c.state, c.plan, cmd.ambulance_id);
        if (next) {
          c.state = std::move(*next);
        } else {
          failures.push_back({std::move(cmd), next.error()});
        }
      }
      c.state = step(std::move(c.state), c.plan, dt);
      if (fingerprint(c.state) != before) on_change(c);
    }
    return failures;
  }

 private:
  static auto fingerprint(const ControllerState& s) {
    return std::tuple(s.mode, s.stage, s.phase, s.lit, s.holder());
  }

  std::map<ControllerId, Controller> controllers_;
};

}  // namespace greenwave::signals
