#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eeasim/exec.hpp"
#include "eeasim/gateway.hpp"
#include "eeasim/service.hpp"
#include "eeasim/signal.hpp"

namespace eea {

inline constexpr std::uint16_t kDefaultServicePort = 30490;

struct BusConfig {
    std::string name;
};

struct FrameConfig {
    std::string bus;
    FrameDef def;
};

// Server-side answer for one method. Default: echo request elements.
struct MethodReply {
    std::optional<std::uint8_t> error_code;
};

struct ServiceConfig {
    InterfacePtr interface;
    std::map<std::uint16_t, MethodReply> replies;
    std::map<std::uint16_t, Values> field_initial;
};

struct SubscriptionConfig {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    std::uint16_t event_id = 0;
};

struct AdapterConfig {
    std::uint16_t port = 0;
    std::vector<FrameKey> frames;
    std::vector<MappingRule> rules;
};

enum class NodeKind { classic, adaptive, gateway };

std::string_view to_string(NodeKind kind) noexcept;

struct NodeConfig {
    std::string id;
    NodeKind kind = NodeKind::classic;
    std::vector<std::string> buses;
    std::uint16_t port = kDefaultServicePort;
    // classic
    std::vector<std::uint32_t> transmits;
    std::vector<std::string> functions;
    // adaptive
    std::vector<AppManifest> manifests;
    std::vector<SubscriptionConfig> subscriptions;
    std::optional<AdapterConfig> adapter;
    bool restart_dependents = false;
    // gateway
    std::optional<GatewayMapping> mapping;
};

struct WriteSignal {
    std::uint32_t frame_id = 0;
    std::string signal;
    double value = 0;
};

struct PublishEvent {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    std::uint16_t event_id = 0;
    Values values;
};

struct CallMethod {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    std::uint16_t method_id = 0;
    Values values;
};

struct SetField {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    std::uint16_t field_id = 0;
    Values values;
};

struct UpdateApp {
    AppManifest manifest;
};

struct StopApp {
    std::string app;
};

struct StartApp {
    std::string app;
};

using Action = std::variant<WriteSignal, PublishEvent, CallMethod, SetField, UpdateApp, StopApp, StartApp>;

std::string_view action_name(const Action& action) noexcept;

struct Stimulus {
    Tick tick = 0;
    std::string node;
    Action action;
};

// Seeded generator of write_signal stimuli: `count` writes starting at
// `start_tick`, gaps drawn from [min_gap, max_gap], values from
// min + k * step within [min, max].
struct RandomWrites {
    std::string node;
    std::uint32_t frame_id = 0;
    std::string signal;
    std::size_t count = 0;
    Tick start_tick = 0;
    Tick min_gap = 1;
    Tick max_gap = 1;
    double min = 0;
    double max = 0;
    double step = 1;
};

struct ScenarioConfig {
    std::string name;
    Tick duration = 1;
    std::uint64_t seed = 0;
    Tick method_timeout = kDefaultMethodTimeout;
    std::vector<BusConfig> buses;
    std::vector<FrameConfig> frames;
    std::vector<ServiceConfig> services;
    std::vector<NodeConfig> nodes;
    std::vector<Stimulus> stimuli;
    std::vector<RandomWrites> random_writes;

    const NodeConfig* find_node(std::string_view id) const;
    const FrameConfig* find_frame(std::uint32_t frame_id) const;
    const FrameConfig* find_frame(const std::string& bus, std::uint32_t frame_id) const;
    const ServiceConfig* find_service(std::uint16_t service_id) const;
};

struct LoadedScenario {
    ScenarioConfig config;
    std::vector<std::string> warnings;
};

/// Throws ParseError for malformed JSON or wrongly typed members and
/// ValidationErrors listing every unresolved reference.
LoadedScenario load_scenario(std::string_view json_text);
/// Also throws IoError.
LoadedScenario load_scenario_file(const std::filesystem::path& path);

/// Semantic checks only; returns every error found. Warnings are appended
/// to `warnings` when given.
std::vector<std::string> validate_scenario(const ScenarioConfig& config, std::vector<std::string>* warnings = nullptr);

/// Explicit stimuli merged with generated ones, ordered by tick, then node
/// id, then declaration order (explicit before generated).
std::vector<Stimulus> expand_stimuli(const ScenarioConfig& config);

}  // namespace eea
