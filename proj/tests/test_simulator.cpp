#include <gtest/gtest.h>

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "eeasim/simulator.hpp"

using namespace eea;
using nlohmann::json;

namespace {

const std::string kScenarios = EEASIM_SCENARIOS;

json fixture_doc(const std::string& name) {
    std::ifstream in(kScenarios + "/" + name + ".json");
    return json::parse(in);
}

ScenarioConfig config_of(const json& doc) { return load_scenario(doc.dump()).config; }
ScenarioConfig fixture(const std::string& name) { return config_of(fixture_doc(name)); }

std::string serialize(const Trace& trace) {
    std::ostringstream out;
    write_trace(trace, out);
    return out.str();
}

std::vector<TraceEvent> of_kind(const Trace& trace, TraceKind kind) {
    std::vector<TraceEvent> out;
    for (const auto& e : trace) {
        if (e.kind == kind) out.push_back(e);
    }
    return out;
}

// Brake topology with a randomized write schedule on top of the fixed stimulus.
json brake_with_random_writes(const std::string& name, std::uint64_t seed) {
    auto doc = fixture_doc(name);
    doc["seed"] = seed;
    doc["duration"] = 400;
    doc["random_stimuli"] = json::parse(R"([{"node": "ecu0", "frame_id": "0x100", "signal": "BrakePressure",
        "count": 60, "start_tick": 20, "min_gap": 1, "max_gap": 5, "min": 0, "max": 65535}])");
    return doc;
}

const std::vector<std::string> kFixtures = {"minimal", "fig5_service_gateway", "fig5_signal_gateway",
                                            "services_demo"};

void check_conservation(const ScenarioConfig& config, const Trace& trace) {
    std::map<std::pair<std::string, std::uint64_t>, std::vector<const TraceEvent*>> rx;
    for (const auto& e : trace) {
        if (e.kind == TraceKind::bus_rx) rx[{e.details["bus"], e.details["bus_seq"]}].push_back(&e);
    }
    for (const auto& e : trace) {
        if (e.kind != TraceKind::bus_tx) continue;
        const std::string bus = e.details["bus"];
        std::size_t attached = 0;
        for (const auto& n : config.nodes) attached += std::count(n.buses.begin(), n.buses.end(), bus);
        const auto& matches = rx[{bus, e.details["bus_seq"]}];
        ASSERT_EQ(matches.size(), attached - 1) << to_json_line(e);
        for (const auto* r : matches) {
            EXPECT_EQ(r->tick, e.tick + 1);
            EXPECT_EQ(r->details["frame_id"], e.details["frame_id"]);
            EXPECT_EQ(r->details["payload"], e.details["payload"]);
            EXPECT_NE(r->node, e.node);
        }
    }
}

void check_causality(const Trace& trace) {
    std::map<std::tuple<int, int, int>, Tick> first_pub;
    std::map<std::pair<int, int>, Tick> requests;  // (client, session)
    for (const auto& e : trace) {
        if (e.kind == TraceKind::evt_pub) {
            first_pub.try_emplace({e.details["service_id"], e.details["instance_id"], e.details["event_id"]}, e.tick);
        } else if (e.kind == TraceKind::evt_recv) {
            const auto it = first_pub.find({e.details["service_id"], e.details["instance_id"], e.details["event_id"]});
            ASSERT_NE(it, first_pub.end()) << to_json_line(e);
            EXPECT_LT(it->second, e.tick);
        } else if (e.kind == TraceKind::method_req) {
            requests[{e.details["client_id"], e.details["session_id"]}] = e.tick;
        } else if (e.kind == TraceKind::method_resp) {
            const auto it = requests.find({e.details["client_id"], e.details["session_id"]});
            ASSERT_NE(it, requests.end()) << to_json_line(e);
            EXPECT_LT(it->second, e.tick);
            EXPECT_EQ(e.details["requested_at"], it->second);
        }
    }
}

}  // namespace

TEST(Simulator, EmptyStimuliProduceOnlyStartup) {
    const auto config = config_of(json::parse(R"({
        "name": "startup", "duration": 30,
        "services": [{"name": "Clock", "service_id": "0x0100",
                      "events": [{"name": "Tick", "event_id": "0x8001", "schema": [{"name": "n", "type": "u32"}]}]}],
        "nodes": [
          {"id": "hpc0", "kind": "adaptive",
           "apps": [{"name": "ClockApp", "version": "1.0.0", "provides": [{"service_id": "0x0100", "instance_id": 1}]},
                    {"name": "Display", "version": "0.3.0", "depends_on": ["ClockApp"]}]}
        ]
    })"));
    const auto result = run(config);
    EXPECT_EQ(result.faults, 0U);
    ASSERT_FALSE(result.trace.empty());
    for (const auto& e : result.trace) {
        EXPECT_TRUE(e.kind == TraceKind::app_state || e.kind == TraceKind::sd_offer) << to_json_line(e);
        EXPECT_EQ(e.tick, 0U);
    }
    EXPECT_EQ(of_kind(result.trace, TraceKind::sd_offer).size(), 1U);
    EXPECT_EQ(of_kind(result.trace, TraceKind::app_state).size(), 4U);
}

TEST(Simulator, MinimalScenarioIsSilent) {
    EXPECT_TRUE(run(fixture("minimal")).trace.empty());
}

TEST(Simulator, RunsAreByteIdentical) {
    for (const auto& name : kFixtures) {
        const auto config = fixture(name);
        EXPECT_EQ(serialize(run(config).trace), serialize(run(config).trace)) << name;
    }
    const auto config = config_of(brake_with_random_writes("fig5_service_gateway", 5));
    EXPECT_EQ(serialize(run(config).trace), serialize(run(config).trace));
}

TEST(Simulator, SeedOnlyAffectsGeneratedStimuli) {
    const auto a = run(config_of(brake_with_random_writes("fig5_service_gateway", 5))).trace;
    const auto b = run(config_of(brake_with_random_writes("fig5_service_gateway", 6))).trace;
    EXPECT_NE(serialize(a), serialize(b));
    auto fixed = fixture("services_demo");
    const auto base = serialize(run(fixed).trace);
    fixed.seed = 987654321;
    EXPECT_EQ(serialize(run(fixed).trace), base);
}

TEST(Simulator, BrakeServiceGatewayTimeline) {
    Simulator sim(fixture("fig5_service_gateway"));
    const auto result = sim.run();
    EXPECT_EQ(result.faults, 0U);

    const auto tx = of_kind(result.trace, TraceKind::bus_tx);
    ASSERT_EQ(tx.size(), 1U);
    EXPECT_EQ(tx[0].tick, 10U);
    EXPECT_EQ(tx[0].node, "ecu0");
    EXPECT_EQ(tx[0].details["payload"], "2c01000000000000");

    const auto routed = of_kind(result.trace, TraceKind::gw_route);
    ASSERT_EQ(routed.size(), 1U);
    EXPECT_EQ(routed[0].tick, 11U);

    const auto recv = of_kind(result.trace, TraceKind::evt_recv);
    ASSERT_EQ(recv.size(), 1U);
    EXPECT_EQ(recv[0].tick, 12U);
    EXPECT_EQ(recv[0].node, "ecu2");
    EXPECT_EQ(recv[0].details["event_id"], 0x8001);
    EXPECT_EQ(recv[0].details["values"]["pressure"], 300.0);
    EXPECT_TRUE(of_kind(result.trace, TraceKind::gw_drop).empty());

    const auto counters = sim.gateway_counters("ecu1");
    ASSERT_TRUE(counters);
    EXPECT_EQ(counters->total, 1U);
    EXPECT_EQ(counters->processed, 1U);
    EXPECT_FALSE(sim.gateway_counters("ecu0"));
}

TEST(Simulator, BrakeSignalGatewayAddsOneHop) {
    const auto result = run(fixture("fig5_signal_gateway"));
    EXPECT_EQ(result.faults, 0U);
    const auto routed = of_kind(result.trace, TraceKind::gw_route);
    ASSERT_EQ(routed.size(), 2U);
    EXPECT_EQ(routed[0].node, "ecu1");
    EXPECT_EQ(routed[0].details["mode"], "signal");
    EXPECT_EQ(routed[0].details["payload"], "000001002c01000000000000");
    EXPECT_EQ(routed[1].node, "ecu2");
    EXPECT_EQ(routed[1].tick, 12U);
    const auto recv = of_kind(result.trace, TraceKind::evt_recv);
    ASSERT_EQ(recv.size(), 1U);
    EXPECT_EQ(recv[0].tick, 13U);
    EXPECT_EQ(recv[0].details["values"]["pressure"], 300.0);
}

TEST(Simulator, UnmappedFrameIsDroppedByGateway) {
    auto doc = fixture_doc("fig5_service_gateway");
    doc["frames"].push_back(json::parse(R"({"bus": "can0", "frame_id": "0x200", "payload_length": 1,
        "signals": [{"name": "Door", "start_bit": 0, "bit_length": 1}]})"));
    doc["nodes"][0]["transmits"].push_back("0x200");
    doc["stimuli"].push_back(json::parse(
        R"({"tick": 3, "node": "ecu0", "action": "write_signal", "frame_id": "0x200", "signal": "Door", "value": 1})"));
    Simulator sim(config_of(doc));
    const auto trace = sim.run().trace;
    const auto drops = of_kind(trace, TraceKind::gw_drop);
    ASSERT_EQ(drops.size(), 1U);
    EXPECT_EQ(drops[0].tick, 4U);
    EXPECT_EQ(drops[0].details["frame_id"], 0x200);
    EXPECT_EQ(sim.gateway_counters("ecu1")->dropped, 1U);
}

TEST(Simulator, ConservationAndCausality) {
    std::vector<ScenarioConfig> configs;
    for (const auto& name : kFixtures) configs.push_back(fixture(name));
    configs.push_back(config_of(brake_with_random_writes("fig5_service_gateway", 11)));
    configs.push_back(config_of(brake_with_random_writes("fig5_signal_gateway", 11)));
    for (const auto& config : configs) {
        SCOPED_TRACE(config.name);
        const auto trace = run(config).trace;
        check_conservation(config, trace);
        check_causality(trace);
        for (std::size_t i = 1; i < trace.size(); ++i) {
            ASSERT_LT(std::tie(trace[i - 1].tick, trace[i - 1].seq), std::tie(trace[i].tick, trace[i].seq));
        }
    }
}

TEST(Simulator, ServicesDemoOutcomes) {
    Simulator sim(fixture("services_demo"));
    const auto result = sim.run();
    EXPECT_EQ(result.faults, 0U);

    std::vector<std::tuple<Tick, std::string, int>> responses;
    for (const auto& e : of_kind(result.trace, TraceKind::method_resp)) {
        responses.emplace_back(e.tick, e.details["status"], e.details["return_code"]);
    }
    const std::vector<std::tuple<Tick, std::string, int>> expected = {
        {5, "ok", 0}, {6, "remote_error", 1}, {7, "ok", 0}, {30, "timeout", 0}};
    EXPECT_EQ(responses, expected);

    const auto sets = of_kind(result.trace, TraceKind::field_set);
    ASSERT_FALSE(sets.empty());
    EXPECT_EQ(sets[0].details["values"]["mode"], 2.0);

    const auto* em = sim.execution_manager("ecu_a");
    ASSERT_NE(em, nullptr);
    EXPECT_EQ(em->manifest("Hmi").version.to_string(), "2.0.0");
    EXPECT_EQ(em->state("Diag"), AppState::running);
    EXPECT_EQ(em->state("Logger"), AppState::terminated);
    EXPECT_EQ(sim.execution_manager("ecu0"), nullptr);
}

TEST(Simulator, PublishesReachOnlyLiveSubscribers) {
    const auto trace = run(fixture("services_demo")).trace;
    const auto recv = of_kind(trace, TraceKind::evt_recv);
    ASSERT_FALSE(recv.empty());
    for (const auto& e : recv) EXPECT_EQ(e.node, "ecu_b");
    // Diag is withdrawn at 15 and re-offered at 20, nothing arrives in between
    for (const auto& e : recv) EXPECT_FALSE(e.tick > 15 && e.tick <= 20) << to_json_line(e);
}

TEST(Simulator, HandlerErrorsBecomeFaults) {
    auto doc = fixture_doc("services_demo");
    doc["stimuli"].push_back(json::parse(R"({"tick": 17, "node": "ecu_b", "action": "call_method",
        "service_id": "0x2000", "instance_id": 1, "method_id": "0x0001", "values": {"x": 1}})"));
    const auto result = run(config_of(doc));
    ASSERT_EQ(result.faults, 1U);
    const auto faults = of_kind(result.trace, TraceKind::fault);
    ASSERT_EQ(faults.size(), 1U);
    EXPECT_EQ(faults[0].tick, 17U);
    EXPECT_EQ(faults[0].node, "ecu_b");
    EXPECT_EQ(faults[0].details["error"], "InstanceNotOffered");
    // the run carried on to the end
    EXPECT_EQ(of_kind(result.trace, TraceKind::method_resp).back().tick, 30U);
}

TEST(Simulator, PeriodicFramesAndDecodedSignals) {
    const auto config = config_of(json::parse(R"({
        "name": "periodic", "duration": 21,
        "buses": [{"name": "can0"}],
        "frames": [{"bus": "can0", "frame_id": "0x50", "payload_length": 2, "cycle_time": 5,
                    "signals": [{"name": "Rpm", "start_bit": 7, "bit_length": 16, "byte_order": "big_endian",
                                 "scale": 0.5}]}],
        "nodes": [{"id": "ecu0", "kind": "classic", "buses": ["can0"], "transmits": ["0x50"]},
                  {"id": "ecu1", "kind": "classic", "buses": ["can0"]},
                  {"id": "ecu2", "kind": "classic", "buses": ["can0"]}],
        "stimuli": [{"tick": 7, "node": "ecu0", "action": "write_signal", "frame_id": "0x50", "signal": "Rpm",
                     "value": 1000.5}]
    })"));
    Simulator sim(config);
    const auto trace = sim.run().trace;
    std::vector<Tick> ticks;
    for (const auto& e : of_kind(trace, TraceKind::bus_tx)) ticks.push_back(e.tick);
    EXPECT_EQ(ticks, (std::vector<Tick>{0, 5, 10, 15, 20}));
    EXPECT_EQ(of_kind(trace, TraceKind::bus_rx).size(), 8U);  // the tick-20 frame is still in flight
    const auto rpm = sim.received_signals("ecu2", 0x50);
    ASSERT_TRUE(rpm);
    EXPECT_DOUBLE_EQ(rpm->at("Rpm"), 1000.5);
    EXPECT_FALSE(sim.received_signals("ecu2", 0x51));
    check_conservation(config, [&] {
        Trace delivered;
        for (const auto& e : trace) {
            if (!(e.kind == TraceKind::bus_tx && e.tick == 20)) delivered.push_back(e);
        }
        return delivered;
    }());
}

TEST(Simulator, StepwiseMatchesRun) {
    const auto config = fixture("fig5_signal_gateway");
    Simulator sim(config);
    Tick ticks = 0;
    while (sim.step()) ++ticks;
    EXPECT_EQ(ticks, config.duration);
    EXPECT_TRUE(sim.finished());
    EXPECT_EQ(serialize(sim.trace()), serialize(run(config).trace));
}
