#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "eeasim/error.hpp"
#include "eeasim/schema.hpp"
#include "eeasim/signal.hpp"
#include "eeasim/types.hpp"

namespace eea {

struct Affine {
    double a = 1.0;
    double b = 0.0;

    double apply(double x) const { return a * x + b; }
};

struct SignalSource {
    std::string bus;
    std::uint32_t frame_id = 0;
    std::string signal;  // unused by passthrough selectors
};

enum class TargetKind { event, field };

struct ServiceTarget {
    std::uint16_t service_id = 0;
    std::uint16_t instance_id = 0;
    TargetKind kind = TargetKind::event;
    std::uint16_t element_id = 0;  // event id, or field base id
};

// Passthrough selector: the matched frame goes to this endpoint unchanged.
struct UdpTarget {
    Endpoint destination;
};

enum class RuleDirection { bus_to_service, service_to_bus };

struct MappingRule {
    SignalSource source;
    std::variant<ServiceTarget, UdpTarget> target;
    std::optional<Affine> transform;
    RuleDirection direction = RuleDirection::bus_to_service;

    const ServiceTarget* service_target() const { return std::get_if<ServiceTarget>(&target); }
    const UdpTarget* udp_target() const { return std::get_if<UdpTarget>(&target); }
};

enum class GatewayMode { service_gateway, signal_gateway };

struct GatewayMapping {
    GatewayMode mode = GatewayMode::service_gateway;
    std::vector<MappingRule> rules;

    /// Service-gateway rules must target a service; signal-gateway rules an
    /// endpoint. Throws InvalidDefinition.
    void validate() const;
};

// Bus frame wrapped for UDP transport: 4-byte big-endian frame id, then the
// original payload verbatim.
struct RawUdpFrame {
    Endpoint destination;
    Bytes payload;

    static RawUdpFrame encapsulate(const BusFrame& frame, Endpoint destination);
    /// Throws Truncated when shorter than the 4-byte prefix.
    static std::uint32_t frame_id_of(std::span<const std::uint8_t> payload);
    static Bytes inner_payload(std::span<const std::uint8_t> payload);
};

struct FrameKey {
    std::string bus;
    std::uint32_t frame_id = 0;

    auto operator<=>(const FrameKey&) const = default;
};

using FrameCatalog = std::map<FrameKey, FrameDef>;

// Single-element record the mapped value is serialized into.
using SchemaResolver = std::function<const PayloadSchema*(const ServiceTarget&)>;
// Publishes an event or updates a field; returns subscribers notified.
using ServicePublisher = std::function<std::size_t(const ServiceTarget&, const Values&)>;

struct Emission {
    std::size_t rule_index = 0;
    ServiceTarget target;
    double signal_value = 0;  // physical value read from the frame
    Values values;            // what was published
    std::size_t notified = 0;
};

struct RuleFailure {
    std::size_t rule_index = 0;
    Errc code = Errc::schema_mismatch;
    std::string message;
};

struct RouteResult {
    bool matched = false;
    std::vector<Emission> emissions;
    std::vector<RuleFailure> failures;
};

/// Shared signal -> service conversion used by the service gateway and the
/// adaptive-side UDP adapter. Rules are evaluated independently; a failing
/// rule is reported and never blocks its siblings.
RouteResult route_signals(const FrameDef& def, std::span<const std::uint8_t> payload,
                          const std::vector<MappingRule>& rules, const std::function<bool(const MappingRule&)>& matches,
                          const SchemaResolver& schemas, const ServicePublisher& publish);

struct GatewayCounters {
    std::uint64_t total = 0;
    std::uint64_t processed = 0;
    std::uint64_t dropped = 0;
};

class Gateway {
public:
    Gateway(GatewayMapping mapping, FrameCatalog frames, SchemaResolver schemas, ServicePublisher publish);

    const GatewayMapping& mapping() const { return mapping_; }
    const GatewayCounters& counters() const { return counters_; }

    /// Unpack, transform and publish every matching rule. Frames without a
    /// matching rule are counted as dropped.
    RouteResult on_bus_frame_service_mode(const std::string& bus, const BusFrame& frame);

    /// Encapsulates the frame once per matching selector. Throws NoRoute (and
    /// counts a drop) when no selector matches.
    std::vector<RawUdpFrame> on_bus_frame_signal_mode(const std::string& bus, const BusFrame& frame);

    /// Reverse direction: a service-side value written back into its bus
    /// signal. Returns the frames to transmit, each carrying the gateway's
    /// latest value for every signal of that frame.
    std::vector<std::pair<std::string, BusFrame>> on_service_value(const ServiceTarget& source, const Values& values);

    /// Service targets this gateway must offer (service mode, bus->service rules).
    std::vector<std::pair<std::uint16_t, std::uint16_t>> offered_targets() const;

private:
    GatewayMapping mapping_;
    FrameCatalog frames_;
    SchemaResolver schemas_;
    ServicePublisher publish_;
    GatewayCounters counters_;
    std::map<FrameKey, SignalValues> shadow_;  // reverse-direction frame contents
};

// Adaptive-side receiver of RawUdpFrames: decodes the inner frame and applies
// the same rules as the service gateway.
class UdpAdapter {
public:
    UdpAdapter(std::vector<FrameDef> frames, std::vector<MappingRule> rules, SchemaResolver schemas,
               ServicePublisher publish);

    /// Throws Truncated, UnknownFrameId.
    RouteResult handle(std::span<const std::uint8_t> udp_payload);

    const std::vector<MappingRule>& rules() const { return rules_; }

private:
    std::map<std::uint32_t, FrameDef> frames_;
    std::vector<MappingRule> rules_;
    SchemaResolver schemas_;
    ServicePublisher publish_;
};

}  // namespace eea
