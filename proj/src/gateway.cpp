#include "eeasim/gateway.hpp"

#include <cmath>
#include <set>

namespace eea {

void GatewayMapping::validate() const {
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& rule = rules[i];
        const auto where = "rule " + std::to_string(i);
        if (mode == GatewayMode::service_gateway) {
            if (rule.service_target() == nullptr) {
                fail(Errc::invalid_definition, where + ": service-gateway rules need a service target");
            }
            if (rule.source.signal.empty()) fail(Errc::invalid_definition, where + ": no source signal");
        } else {
            if (rule.udp_target() == nullptr) {
                fail(Errc::invalid_definition, where + ": signal-gateway rules need a destination endpoint");
            }
            if (rule.direction != RuleDirection::bus_to_service) {
                fail(Errc::invalid_definition, where + ": passthrough selectors are bus-to-network only");
            }
        }
        if (rule.transform && (!std::isfinite(rule.transform->a) || !std::isfinite(rule.transform->b))) {
            fail(Errc::invalid_definition, where + ": non-finite transform");
        }
    }
}

RawUdpFrame RawUdpFrame::encapsulate(const BusFrame& frame, Endpoint destination) {
    RawUdpFrame out{std::move(destination), {}};
    out.payload.reserve(4 + frame.payload.size());
    for (int shift = 24; shift >= 0; shift -= 8) out.payload.push_back(static_cast<std::uint8_t>(frame.frame_id >> shift));
    out.payload.insert(out.payload.end(), frame.payload.begin(), frame.payload.end());
    return out;
}

std::uint32_t RawUdpFrame::frame_id_of(std::span<const std::uint8_t> payload) {
    if (payload.size() < 4) fail(Errc::truncated, "UDP frame shorter than its 4-byte frame id prefix");
    return (std::uint32_t{payload[0]} << 24) | (std::uint32_t{payload[1]} << 16) | (std::uint32_t{payload[2]} << 8) |
           payload[3];
}

Bytes RawUdpFrame::inner_payload(std::span<const std::uint8_t> payload) {
    if (payload.size() < 4) fail(Errc::truncated, "UDP frame shorter than its 4-byte frame id prefix");
    return {payload.begin() + 4, payload.end()};
}

RouteResult route_signals(const FrameDef& def, std::span<const std::uint8_t> payload,
                          const std::vector<MappingRule>& rules, const std::function<bool(const MappingRule&)>& matches,
                          const SchemaResolver& schemas, const ServicePublisher& publish) {
    RouteResult result;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& rule = rules[i];
        const auto* target = rule.service_target();
        if (target == nullptr || rule.direction != RuleDirection::bus_to_service || !matches(rule)) continue;
        result.matched = true;
        try {
            const auto* sig = def.find_signal(rule.source.signal);
            if (sig == nullptr) fail(Errc::unknown_signal, "frame has no signal '" + rule.source.signal + "'");
            const double physical = unpack_signal(payload, *sig);
            const double mapped = rule.transform ? rule.transform->apply(physical) : physical;
            const auto* schema = schemas(*target);
            if (schema == nullptr || schema->elements.size() != 1) {
                fail(Errc::schema_mismatch, "target of rule " + std::to_string(i) + " is not a single-element record");
            }
            const auto& element = schema->elements.front();
            Values values{{element.name, PayloadSchema::coerce(element.type, mapped, element.name)}};
            const auto notified = publish(*target, values);
            result.emissions.push_back({i, *target, physical, std::move(values), notified});
        } catch (const Error& e) {
            result.failures.push_back({i, e.code(), e.what()});
        }
    }
    return result;
}

Gateway::Gateway(GatewayMapping mapping, FrameCatalog frames, SchemaResolver schemas, ServicePublisher publish)
    : mapping_(std::move(mapping)),
      frames_(std::move(frames)),
      schemas_(std::move(schemas)),
      publish_(std::move(publish)) {
    mapping_.validate();
}

RouteResult Gateway::on_bus_frame_service_mode(const std::string& bus, const BusFrame& frame) {
    ++counters_.total;
    RouteResult result;
    auto def = frames_.find({bus, frame.frame_id});
    if (mapping_.mode == GatewayMode::service_gateway && def != frames_.end()) {
        result = route_signals(
            def->second, frame.payload, mapping_.rules,
            [&](const MappingRule& r) { return r.source.bus == bus && r.source.frame_id == frame.frame_id; }, schemas_,
            publish_);
    }
    if (result.matched) {
        ++counters_.processed;
    } else {
        ++counters_.dropped;
    }
    return result;
}

std::vector<RawUdpFrame> Gateway::on_bus_frame_signal_mode(const std::string& bus, const BusFrame& frame) {
    ++counters_.total;
    std::vector<RawUdpFrame> out;
    std::set<Endpoint> sent;
    if (mapping_.mode == GatewayMode::signal_gateway) {
        for (const auto& rule : mapping_.rules) {
            const auto* udp = rule.udp_target();
            if (udp == nullptr || rule.source.bus != bus || rule.source.frame_id != frame.frame_id) continue;
            if (sent.insert(udp->destination).second) out.push_back(RawUdpFrame::encapsulate(frame, udp->destination));
        }
    }
    if (out.empty()) {
        ++counters_.dropped;
        fail(Errc::no_route, "no selector for frame " + std::to_string(frame.frame_id) + " on bus '" + bus + "'");
    }
    ++counters_.processed;
    return out;
}

std::vector<std::pair<std::string, BusFrame>> Gateway::on_service_value(const ServiceTarget& source,
                                                                        const Values& values) {
    std::vector<std::pair<std::string, BusFrame>> out;
    std::set<FrameKey> touched;
    for (const auto& rule : mapping_.rules) {
        const auto* t = rule.service_target();
        if (t == nullptr || rule.direction != RuleDirection::service_to_bus) continue;
        if (t->service_id != source.service_id || t->instance_id != source.instance_id || t->kind != source.kind ||
            t->element_id != source.element_id) {
            continue;
        }
        if (values.size() != 1) fail(Errc::schema_mismatch, "reverse rules carry single-element records");
        const FrameKey key{rule.source.bus, rule.source.frame_id};
        auto def = frames_.find(key);
        if (def == frames_.end()) fail(Errc::unknown_frame_id, "no frame " + std::to_string(key.frame_id));
        if (def->second.find_signal(rule.source.signal) == nullptr) {
            fail(Errc::unknown_signal, "frame has no signal '" + rule.source.signal + "'");
        }
        const double x = values.begin()->second;
        shadow_[key][rule.source.signal] = rule.transform ? rule.transform->apply(x) : x;
        touched.insert(key);
    }
    for (const auto& key : touched) out.emplace_back(key.bus, encode_frame(frames_.at(key), shadow_[key]));
    return out;
}

std::vector<std::pair<std::uint16_t, std::uint16_t>> Gateway::offered_targets() const {
    std::set<std::pair<std::uint16_t, std::uint16_t>> out;
    if (mapping_.mode == GatewayMode::service_gateway) {
        for (const auto& rule : mapping_.rules) {
            const auto* t = rule.service_target();
            if (t == nullptr) continue;
            if (rule.direction == RuleDirection::bus_to_service || t->kind == TargetKind::field) {
                out.insert({t->service_id, t->instance_id});
            }
        }
    }
    return {out.begin(), out.end()};
}

UdpAdapter::UdpAdapter(std::vector<FrameDef> frames, std::vector<MappingRule> rules, SchemaResolver schemas,
                       ServicePublisher publish)
    : rules_(std::move(rules)), schemas_(std::move(schemas)), publish_(std::move(publish)) {
    for (auto& f : frames) {
        const auto id = f.frame_id;
        if (!frames_.emplace(id, std::move(f)).second) {
            fail(Errc::invalid_definition, "adapter frame id " + std::to_string(id) + " listed twice");
        }
    }
}

RouteResult UdpAdapter::handle(std::span<const std::uint8_t> udp_payload) {
    const auto frame_id = RawUdpFrame::frame_id_of(udp_payload);
    auto def = frames_.find(frame_id);
    if (def == frames_.end()) fail(Errc::unknown_frame_id, "no frame definition for id " + std::to_string(frame_id));
    BusFrame frame;
    frame.frame_id = frame_id;
    frame.payload = RawUdpFrame::inner_payload(udp_payload);
    // decode_frame checks id and length before any rule runs
    (void)decode_frame(def->second, frame);
    return route_signals(
        def->second, frame.payload, rules_, [&](const MappingRule& r) { return r.source.frame_id == frame_id; },
        schemas_, publish_);
}

}  // namespace eea
