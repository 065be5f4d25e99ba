#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "eeasim/error.hpp"
#include "eeasim/scenario.hpp"

using namespace eea;
using nlohmann::json;

namespace {

const std::string kScenarios = EEASIM_SCENARIOS;

json minimal_doc() {
    return json::parse(R"({
        "name": "t", "duration": 10,
        "buses": [{"name": "can0"}],
        "frames": [{"bus": "can0", "frame_id": "0x10", "payload_length": 2,
                    "signals": [{"name": "Speed", "start_bit": 0, "bit_length": 16}]}],
        "nodes": [{"id": "ecu0", "kind": "classic", "buses": ["can0"], "transmits": ["0x10"]},
                  {"id": "ecu1", "kind": "classic", "buses": ["can0"], "transmits": []}]
    })");
}

std::vector<std::string> validation_errors_of(const std::string& text) {
    try {
        load_scenario(text);
    } catch (const ValidationErrors& e) {
        return e.errors();
    }
    ADD_FAILURE() << "expected ValidationErrors";
    return {};
}

Errc error_of(const std::string& text) {
    try {
        load_scenario(text);
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an error";
    return Errc::io_error;
}

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
    return std::any_of(errors.begin(), errors.end(),
                       [&](const std::string& e) { return e.find(needle) != std::string::npos; });
}

json write_stimulus(Tick tick, const std::string& node, double value) {
    json w;
    w["tick"] = tick;
    w["node"] = node;
    w["action"] = "write_signal";
    w["frame_id"] = "0x10";
    w["signal"] = "Speed";
    w["value"] = value;
    return w;
}

}  // namespace

TEST(LoadScenario, MinimalFixtureHasNoWarnings) {
    const auto loaded = load_scenario_file(kScenarios + "/minimal.json");
    EXPECT_TRUE(loaded.warnings.empty());
    EXPECT_EQ(loaded.config.nodes.size(), 1U);
    EXPECT_EQ(loaded.config.duration, 10U);
}

TEST(LoadScenario, UnknownStimulusNode) {
    auto doc = minimal_doc();
    doc["stimuli"] = json::array({write_stimulus(1, "ecu9", 5)});
    const auto errors = validation_errors_of(doc.dump());
    EXPECT_TRUE(mentions(errors, "ecu9"));
}

TEST(LoadScenario, ShippedFixturesLoad) {
    for (const char* name : {"fig5_service_gateway", "fig5_signal_gateway", "services_demo"}) {
        const auto loaded = load_scenario_file(kScenarios + "/" + name + ".json");
        EXPECT_TRUE(loaded.warnings.empty()) << name;
    }
    const auto fig5 = load_scenario_file(kScenarios + "/fig5_service_gateway.json").config;
    ASSERT_NE(fig5.find_node("ecu1"), nullptr);
    EXPECT_EQ(fig5.find_node("ecu1")->kind, NodeKind::gateway);
    ASSERT_NE(fig5.find_frame(0x100), nullptr);
    EXPECT_EQ(fig5.find_frame(0x100)->def.signals.at(0).name, "BrakePressure");
    ASSERT_NE(fig5.find_service(0x1234), nullptr);
}

TEST(LoadScenario, EveryErrorIsReported) {
    try {
        load_scenario_file(kScenarios + "/broken.json");
        FAIL();
    } catch (const ValidationErrors& e) {
        EXPECT_EQ(e.errors().size(), 4U);
        EXPECT_TRUE(mentions(e.errors(), "can9"));
        EXPECT_TRUE(mentions(e.errors(), "flexray1"));
        EXPECT_TRUE(mentions(e.errors(), "ecu9"));
        EXPECT_EQ(e.code(), Errc::validation_errors);
    }
}

TEST(LoadScenario, CrossReferenceErrors) {
    auto doc = minimal_doc();
    doc["duration"] = 0;
    doc["nodes"][1]["buses"] = json::array({"lin7"});
    doc["stimuli"] = json::array({write_stimulus(1, "ecu1", 5)});
    const auto errors = validation_errors_of(doc.dump());
    EXPECT_TRUE(mentions(errors, "duration"));
    EXPECT_TRUE(mentions(errors, "lin7"));
    EXPECT_GE(errors.size(), 3U);
}

TEST(LoadScenario, OutOfRangeWriteIsRejected) {
    auto doc = minimal_doc();
    doc["stimuli"] = json::array({write_stimulus(1, "ecu0", 70000)});
    EXPECT_FALSE(validation_errors_of(doc.dump()).empty());
}

TEST(LoadScenario, LateStimulusWarns) {
    auto doc = minimal_doc();
    doc["stimuli"] = json::array({write_stimulus(50, "ecu0", 1)});
    const auto loaded = load_scenario(doc.dump());
    ASSERT_EQ(loaded.warnings.size(), 1U);
}

TEST(LoadScenario, ParseErrors) {
    EXPECT_EQ(error_of("{"), Errc::parse_error);
    EXPECT_EQ(error_of("[]"), Errc::parse_error);
    auto doc = minimal_doc();
    doc["duration"] = "ten";
    EXPECT_EQ(error_of(doc.dump()), Errc::parse_error);
    doc = minimal_doc();
    doc["frames"][0]["frame_id"] = "0xZZ";
    EXPECT_EQ(error_of(doc.dump()), Errc::parse_error);
    doc = minimal_doc();
    doc["nodes"][0]["kind"] = "quantum";
    EXPECT_EQ(error_of(doc.dump()), Errc::parse_error);
    doc = minimal_doc();
    doc["stimuli"] = json::parse(R"([{"tick": 1, "node": "ecu0", "action": "reboot"}])");
    EXPECT_EQ(error_of(doc.dump()), Errc::parse_error);
}

TEST(LoadScenario, MissingFileIsIoError) {
    try {
        load_scenario_file(kScenarios + "/does_not_exist.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::io_error);
    }
}

TEST(ExpandStimuli, OrderedByTickThenNodeThenDeclaration) {
    auto config = load_scenario(minimal_doc().dump()).config;
    for (const auto& [tick, node, value] : std::vector<std::tuple<Tick, std::string, double>>{
             {5, "ecu1", 1}, {5, "ecu0", 2}, {2, "ecu1", 3}, {5, "ecu0", 4}}) {
        config.stimuli.push_back({tick, node, WriteSignal{0x10, "Speed", value}});
    }
    const auto out = expand_stimuli(config);
    std::vector<double> values;
    for (const auto& s : out) values.push_back(std::get<WriteSignal>(s.action).value);
    EXPECT_EQ(values, (std::vector<double>{3, 2, 4, 1}));
}

TEST(ExpandStimuli, GeneratedWritesAreSeededAndBounded) {
    auto config = load_scenario(minimal_doc().dump()).config;
    config.duration = 1000;
    config.seed = 42;
    config.stimuli.push_back({3, "ecu0", WriteSignal{0x10, "Speed", 7}});
    config.random_writes.push_back({"ecu0", 0x10, "Speed", 50, 3, 2, 5, 100, 200, 0.5});

    const auto a = expand_stimuli(config);
    const auto b = expand_stimuli(config);
    ASSERT_EQ(a.size(), 51U);
    EXPECT_EQ(std::get<WriteSignal>(a[0].action).value, 7);  // explicit before generated on a shared tick
    Tick previous = 3;
    for (std::size_t i = 1; i < a.size(); ++i) {
        const auto& w = std::get<WriteSignal>(a[i].action);
        EXPECT_EQ(a[i].tick, b[i].tick);
        EXPECT_EQ(w.value, std::get<WriteSignal>(b[i].action).value);
        EXPECT_GE(w.value, 100);
        EXPECT_LE(w.value, 200);
        EXPECT_DOUBLE_EQ(w.value * 2, std::round(w.value * 2));
        if (i >= 2) {
            EXPECT_GE(a[i].tick - previous, 2U);
            EXPECT_LE(a[i].tick - previous, 5U);
        }
        previous = a[i].tick;
    }

    config.seed = 43;
    const auto c = expand_stimuli(config);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        differs |= a[i].tick != c[i].tick ||
                   std::get<WriteSignal>(a[i].action).value != std::get<WriteSignal>(c[i].action).value;
    }
    EXPECT_TRUE(differs);
}

TEST(ExpandStimuli, GeneratorsParsedFromDocument) {
    auto doc = minimal_doc();
    doc["duration"] = 100;
    doc["random_stimuli"] = json::parse(R"([{"node": "ecu0", "frame_id": "0x10", "signal": "Speed",
                                               "count": 10, "start_tick": 1, "min": 0, "max": 9}])");
    const auto config = load_scenario(doc.dump()).config;
    const auto out = expand_stimuli(config);
    ASSERT_EQ(out.size(), 10U);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].tick, 1 + i);
}
