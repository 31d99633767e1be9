#include <gtest/gtest.h>

#include "greenwave/demo.hpp"
#include "greenwave/report.hpp"
#include "greenwave/sim.hpp"
#include "support/scenarios.hpp"

using namespace greenwave;
using namespace greenwave::sim;

namespace {

RunResult must_run(Scenario sc, SimMode mode) {
  auto r = run(std::move(sc), mode);
  EXPECT_TRUE(r) << (r ? "" : r.error().reason);
  return *r;
}

const AmbulanceMetrics& only(const RunResult& r) { return r.metrics.ambulances.at(0); }

}  // namespace

TEST(Modes, ParseAndPrint) {
  EXPECT_EQ(parse_mode("auto"), SimMode::AutoPreempt);
  EXPECT_EQ(parse_mode("baseline"), SimMode::Baseline);
  EXPECT_EQ(parse_mode("operator"), SimMode::Operator);
  EXPECT_FALSE(parse_mode("AUTO").has_value());
  EXPECT_STREQ(to_string(SimMode::AutoPreempt), "auto");
}

TEST(Validate, RejectsBadScenarios) {
  auto sc = scenarios::line();
  sc.sim.dt = Duration{300};
  EXPECT_EQ(validate(sc).error().reason, "device.parse_window_s must be a multiple of sim.dt_s");
  sc.device.parse_window = Duration{900};
  EXPECT_EQ(validate(sc).error().reason, "sim.dt_s must divide one second");

  sc = scenarios::line();
  sc.signals[0].controller = "TL-X";
  EXPECT_EQ(validate(sc).error().reason, "signal TL-X: not registered as the node's intersection");

  sc = scenarios::line();
  sc.signals[0].plan.phases[1].green = {ApproachId{2}};
  sc.signals[0].plan.conflicts.clear();
  sc.signals[0].plan.derive_conflicts();
  EXPECT_EQ(validate(sc).error().reason, "signal TL-2: approach 2 is not an edge into node 2");

  sc = scenarios::line();
  sc.ambulances.push_back(sc.ambulances[0]);
  EXPECT_EQ(validate(sc).error().reason, "ambulance A-1: duplicate id");

  sc = scenarios::line();
  sc.ambulances[0].hospital = NodeId{2};
  EXPECT_EQ(validate(sc).error().reason, "ambulance A-1: node 2 is not a hospital");

  EXPECT_TRUE(validate(scenarios::line()));
}

TEST(Vehicle, UnsignalizedRouteTakesFreeFlowTime) {
  scenarios::LineOptions o;
  o.signalized = false;
  for (SimMode mode : {SimMode::Baseline, SimMode::AutoPreempt, SimMode::Operator}) {
    const auto r = must_run(scenarios::line(o), mode);
    ASSERT_TRUE(only(r).travel_time_s.has_value());
    EXPECT_NEAR(*only(r).travel_time_s, 154.0, 1e-6);
    EXPECT_EQ(only(r).stops_count, 0);
    EXPECT_TRUE(r.metrics.completed);
    EXPECT_EQ(r.metrics.preempt_commands, 0u);
  }
}

TEST(Vehicle, RedWithTenSecondsLeftWaitsTenSeconds) {
  const auto r = must_run(scenarios::line(), SimMode::Baseline);
  EXPECT_EQ(only(r).stops_count, 1);
  ASSERT_EQ(only(r).waits.size(), 1u);
  EXPECT_NEAR(only(r).waits[0].wait_s, 10.0, 1e-6);
  EXPECT_NEAR(*only(r).travel_time_s, 164.0, 1e-6);
  ASSERT_EQ(only(r).node_arrivals.size(), 1u);
  EXPECT_NEAR(only(r).node_arrivals[0].time_s, 94.0, 1e-6);
}

TEST(Vehicle, QueueAddsItsDischargeTime) {
  scenarios::LineOptions o;
  o.queue = 3;
  const auto r = must_run(scenarios::line(o), SimMode::Baseline);
  ASSERT_EQ(only(r).waits.size(), 1u);
  EXPECT_NEAR(only(r).waits[0].wait_s, 16.0, 1e-6);
  EXPECT_NEAR(*only(r).travel_time_s, 170.0, 1e-6);
}

TEST(Vehicle, GreenArrivalDoesNotStop) {
  scenarios::LineOptions o;
  o.offset = Duration{20000};
  const auto r = must_run(scenarios::line(o), SimMode::Baseline);
  EXPECT_EQ(only(r).stops_count, 0);
  EXPECT_NEAR(*only(r).travel_time_s, 154.0, 1e-6);
  EXPECT_NEAR(only(r).waits.at(0).wait_s, 0.0, 1e-9);
}

TEST(Vehicle, TickSizeDoesNotChangeBaselineTimes) {
  for (int queue : {0, 3}) {
    std::optional<double> reference;
    for (int dt_ms : {50, 100, 200, 250, 500, 1000}) {
      scenarios::LineOptions o;
      o.queue = queue;
      o.dt = Duration{dt_ms};
      const auto r = must_run(scenarios::line(o), SimMode::Baseline);
      if (!reference) reference = *only(r).travel_time_s;
      EXPECT_NEAR(*only(r).travel_time_s, *reference, 1e-6) << "dt " << dt_ms;
    }
  }
}

TEST(Vehicle, AutoPreemptionClearsTheRedAndTheQueue) {
  scenarios::LineOptions o;
  o.queue = 3;
  o.mode = SimMode::AutoPreempt;
  const auto r = must_run(scenarios::line(o), SimMode::AutoPreempt);
  EXPECT_EQ(only(r).stops_count, 0);
  EXPECT_NEAR(*only(r).travel_time_s, 154.0, 1e-6);
  EXPECT_EQ(r.metrics.preempt_commands, 1u);
  EXPECT_EQ(r.metrics.release_commands, 1u);
}

TEST(Vehicle, SynthesizedFixesParseBackToThePosition) {
  const auto sc = scenarios::line();
  auto v = make_vehicle("A-1", *roadnet::shortest_path(sc.graph, NodeId{1}, NodeId{3}), 0.0);
  auto check = [&](double lat, double lon) {
    const std::string s = synthesize_fix(v, sc.graph, 3600.5);
    ASSERT_EQ(s.substr(s.size() - 2), "\r\n");
    const auto parsed = nmea::parse_sentence(std::string_view(s).substr(0, s.size() - 2));
    ASSERT_TRUE(std::holds_alternative<nmea::GeoPosition>(parsed)) << s;
    const auto& p = std::get<nmea::GeoPosition>(parsed);
    EXPECT_NEAR(p.latitude, lat, 1e-6);
    EXPECT_NEAR(p.longitude, lon, 1e-6);
    EXPECT_DOUBLE_EQ(p.utc_time, 3600.5);
    EXPECT_EQ(p.fix_quality, 1);
  };
  check(sc.graph.node(NodeId{1}).latitude, 11.5);
  v.distance_m = 470.0;
  check((sc.graph.node(NodeId{1}).latitude + sc.graph.node(NodeId{2}).latitude) / 2, 11.5);
  v.edge_index = 1;
  v.distance_m = 600.0;
  check(sc.graph.node(NodeId{3}).latitude, 11.5);
}

TEST(Vehicle, DepartureIsHeldUntilDepartTime) {
  auto sc = scenarios::line();
  sc.ambulances[0].depart = Duration{5000};
  const auto r = must_run(sc, SimMode::Baseline);
  EXPECT_DOUBLE_EQ(only(r).depart_s, 5.0);
  EXPECT_NEAR(*only(r).arrive_s, 5.0 + 94.0 + 5.0 + 60.0, 1e-6);
}

TEST(Run, HorizonCutsTheRunShort) {
  auto sc = scenarios::line();
  sc.sim.horizon = Duration{50000};
  const auto r = must_run(sc, SimMode::Baseline);
  EXPECT_FALSE(r.metrics.completed);
  EXPECT_FALSE(only(r).arrive_s.has_value());
  EXPECT_GE(r.metrics.end_s, 50.0);
}

TEST(Run, SimulationReachesDoneThroughSettleAndDrain) {
  auto sc = scenarios::line();
  sc.sim.mode = SimMode::AutoPreempt;
  Simulation sim(sc);
  bool settled = false;
  bool drained = false;
  while (!sim.done()) {
    sim.tick();
    settled = settled || sim.phase() == Simulation::Phase::Settling;
    drained = drained || sim.phase() == Simulation::Phase::Draining;
  }
  EXPECT_TRUE(settled || drained);
  EXPECT_EQ(sim.network().in_flight(), 0u);
  EXPECT_TRUE(sim.control_room().all_arrived());
  for (const auto& [id, c] : sim.signal_bank().all()) EXPECT_FALSE(c.state.holder().has_value()) << id;
}

TEST(Run, MessageConservationUnderLoss) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    auto sc = demo::grid_city();
    sc.sim.seed = seed;
    sc.sim.sms.loss_probability = 0.2;
    sc.sim.modem_send_time = Duration{700};
    const auto r = must_run(sc, SimMode::AutoPreempt);
    for (const auto& a : r.metrics.ambulances) {
      EXPECT_EQ(a.messages.sent, a.messages.delivered + a.messages.lost + a.messages.dropped_busy) << a.ambulance_id;
    }
    const auto& m = r.metrics.messages;
    EXPECT_EQ(m.sent, m.delivered + m.lost + m.dropped_busy);
    EXPECT_GT(m.lost, 0u);
    EXPECT_GT(m.dropped_busy, 0u);
  }
}

TEST(Run, SameSeedGivesIdenticalLogsAndReports) {
  auto sc = demo::grid_city();
  sc.sim.sms.loss_probability = 0.2;
  const auto a = must_run(sc, SimMode::AutoPreempt);
  const auto b = must_run(sc, SimMode::AutoPreempt);
  EXPECT_EQ(a.event_log, b.event_log);
  EXPECT_EQ(report::to_json(a.metrics).dump(), report::to_json(b.metrics).dump());
  sc.sim.seed = 8;
  const auto c = must_run(sc, SimMode::AutoPreempt);
  EXPECT_NE(a.event_log, c.event_log);
}

TEST(Run, ReplayingRecordedInputsReproducesTheLog) {
  for (double loss : {0.0, 0.2}) {
    auto sc = demo::grid_city();
    sc.sim.sms.loss_probability = loss;
    sc.sim.mode = SimMode::AutoPreempt;
    Simulation sim(sc);
    sim.run_to_completion();
    EXPECT_EQ(replay_control_room(sc, sim.events()), sim.events().to_jsonl()) << "loss " << loss;
  }
}

TEST(Run, OperatorScriptDrivesTheSignalInOperatorMode) {
  auto sc = scenarios::line();
  sc.operator_script.push_back(ScriptedAction{instant_at(70), "alice", control_room::Preempt{"TL-2", ApproachId{1}}});
  sc.operator_script.push_back(ScriptedAction{instant_at(100), "alice", control_room::Release{"TL-2"}});
  const auto op = must_run(sc, SimMode::Operator);
  EXPECT_EQ(only(op).stops_count, 0);
  EXPECT_NEAR(*only(op).travel_time_s, 154.0, 1e-6);
  EXPECT_NE(op.event_log.find("\"holder\":\"OP-alice\""), std::string::npos);
  EXPECT_NE(op.event_log.find("OPERATOR_ACTION"), std::string::npos);

  const auto base = must_run(sc, SimMode::Baseline);
  EXPECT_EQ(base.event_log.find("OPERATOR_ACTION"), std::string::npos);
  EXPECT_EQ(only(base).stops_count, 1);
}

TEST(Run, OperatorModeSendsNoAutomaticPreemption) {
  const auto r = must_run(scenarios::line(), SimMode::Operator);
  EXPECT_EQ(r.metrics.preempt_commands, 0u);
  EXPECT_EQ(only(r).stops_count, 1);
}

TEST(Run, LiveOperatorCommandReturnsRejections) {
  auto sc = scenarios::line();
  sc.sim.mode = SimMode::Operator;
  Simulation sim(sc);
  sim.tick();
  EXPECT_EQ(sim.operator_command(control_room::Preempt{"TL-2", ApproachId{2}}, "bob").error().http_status(), 409);
  EXPECT_EQ(sim.operator_command(control_room::Release{"TL-9"}, "bob").error().http_status(), 404);
  EXPECT_TRUE(sim.operator_command(control_room::Preempt{"TL-2", ApproachId{1}}, "bob"));
  sim.tick();
  EXPECT_EQ(sim.signal_bank().at("TL-2").state.holder(), "OP-bob");
}

TEST(Report, JsonTableAndComparison) {
  const auto base = must_run(scenarios::line(), SimMode::Baseline);
  const auto fast = must_run(scenarios::line(), SimMode::AutoPreempt);
  const auto j = report::to_json(fast.metrics);
  EXPECT_EQ(j["mode"], "auto");
  EXPECT_EQ(j["ambulances"][0]["id"], "A-1");
  EXPECT_EQ(j["ambulances"][0]["travel_time_s"].get<double>(), report::seconds(*only(fast).travel_time_s));
  EXPECT_NEAR(j["ambulances"][0]["travel_time_s"].get<double>(), *only(fast).travel_time_s, 1e-6);
  EXPECT_NE(report::table(base.metrics).find("A-1"), std::string::npos);
  EXPECT_EQ(report::comparison(base.metrics, fast.metrics),
            "compare A-1: baseline 164.0 s -> auto 154.0 s (delta travel time -10.0 s)\n");
}
