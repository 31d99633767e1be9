#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "greenwave/sim.hpp"

namespace greenwave::report {

using nlohmann::json;

inline json counters_json(const sim::MessageCounters& c) {
  return {{"sent", c.sent}, {"delivered", c.delivered}, {"lost", c.lost}, {"dropped_busy", c.dropped_busy}};
}

/// Seconds rounded to the microsecond, so sub-tick accumulation noise stays out of reports.
inline double seconds(double s) { return std::round(s * 1e6) / 1e6; }

inline json seconds_or_null(const std::optional<double>& s) { return s ? json(seconds(*s)) : json(nullptr); }

inline json to_json(const sim::RunMetrics& m) {
  json ambulances = json::array();
  for (const auto& a : m.ambulances) {
    json waits = json::array();
    for (const auto& w : a.waits) waits.push_back({{"node", w.node.value}, {"wait_s", seconds(w.wait_s)}});
    ambulances.push_back({{"id", a.ambulance_id},
                          {"hospital", a.hospital.value},
                          {"depart_s", seconds(a.depart_s)},
                          {"arrive_s", seconds_or_null(a.arrive_s)},
                          {"travel_time_s", seconds_or_null(a.travel_time_s)},
                          {"stops_count", a.stops_count},
                          {"intersection_waits", waits},
                          {"messages", counters_json(a.messages)}});
  }
  return {{"scenario", m.scenario},
          {"mode", sim::to_string(m.mode)},
          {"seed", m.seed},
          {"completed", m.completed},
          {"end_s", seconds(m.end_s)},
          {"ambulances", ambulances},
          {"messages", counters_json(m.messages)},
          {"preempt_commands", m.preempt_commands},
          {"release_commands", m.release_commands}};
}

inline std::string format_seconds(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", *v);
  return buf;
}

/// Fixed-width table for terminals.
inline std::string table(const sim::RunMetrics& m) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "scenario %s  mode %s  seed %llu\n", m.scenario.c_str(), sim::to_string(m.mode),
                static_cast<unsigned long long>(m.seed));
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8s %10s %6s %10s %5s %9s %5s %7s\n", "ambulance", "hospital", "travel_s",
                "stops", "wait_s", "sent", "delivered", "lost", "dropped");
  out += line;
  for (const auto& a : m.ambulances) {
    double wait = 0.0;
    for (const auto& w : a.waits) wait += w.wait_s;
    std::snprintf(line, sizeof line, "%-12s %8lld %10s %6d %10.1f %5llu %9llu %5llu %7llu\n", a.ambulance_id.c_str(),
                  static_cast<long long>(a.hospital.value), format_seconds(a.travel_time_s).c_str(), a.stops_count, wait,
                  static_cast<unsigned long long>(a.messages.sent), static_cast<unsigned long long>(a.messages.delivered),
                  static_cast<unsigned long long>(a.messages.lost),
                  static_cast<unsigned long long>(a.messages.dropped_busy));
    out += line;
  }
  std::snprintf(line, sizeof line, "messages sent %llu delivered %llu lost %llu dropped %llu; preempts %llu releases %llu\n",
                static_cast<unsigned long long>(m.messages.sent), static_cast<unsigned long long>(m.messages.delivered),
                static_cast<unsigned long long>(m.messages.lost),
                static_cast<unsigned long long>(m.messages.dropped_busy),
                static_cast<unsigned long long>(m.preempt_commands),
                static_cast<unsigned long long>(m.release_commands));
  out += line;
  return out;
}

/// One line per ambulance present in both runs: travel time difference (b − a).
inline std::string comparison(const sim::RunMetrics& a, const sim::RunMetrics& b) {
  std::string out;
  char line[200];
  for (const auto& x : a.ambulances) {
    for (const auto& y : b.ambulances) {
      if (x.ambulance_id != y.ambulance_id) continue;
      std::string delta = "-";
      if (x.travel_time_s && y.travel_time_s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%+.1f", *y.travel_time_s - *x.travel_time_s);
        delta = buf;
      }
      std::snprintf(line, sizeof line, "compare %s: %s %s s -> %s %s s (delta travel time %s s)\n",
                    x.ambulance_id.c_str(), sim::to_string(a.mode), format_seconds(x.travel_time_s).c_str(),
                    sim::to_string(b.mode), format_seconds(y.travel_time_s).c_str(), delta.c_str());
      out += line;
    }
  }
  return out;
}

}  // namespace greenwave::report
