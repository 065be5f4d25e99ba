#include "eeasim/trace.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "eeasim/error.hpp"

namespace eea {

namespace {

constexpr TraceKind kAllKinds[] = {
    TraceKind::bus_tx,     TraceKind::bus_rx,      TraceKind::sd_offer,  TraceKind::sd_find,   TraceKind::sd_subscribe,
    TraceKind::evt_pub,    TraceKind::evt_recv,    TraceKind::method_req, TraceKind::method_resp, TraceKind::field_set,
    TraceKind::app_state,  TraceKind::gw_route,    TraceKind::gw_drop,   TraceKind::fault,
};

}  // namespace

std::string_view to_string(TraceKind kind) noexcept {
    switch (kind) {
        case TraceKind::bus_tx: return "bus_tx";
        case TraceKind::bus_rx: return "bus_rx";
        case TraceKind::sd_offer: return "sd_offer";
        case TraceKind::sd_find: return "sd_find";
        case TraceKind::sd_subscribe: return "sd_subscribe";
        case TraceKind::evt_pub: return "evt_pub";
        case TraceKind::evt_recv: return "evt_recv";
        case TraceKind::method_req: return "method_req";
        case TraceKind::method_resp: return "method_resp";
        case TraceKind::field_set: return "field_set";
        case TraceKind::app_state: return "app_state";
        case TraceKind::gw_route: return "gw_route";
        case TraceKind::gw_drop: return "gw_drop";
        case TraceKind::fault: return "fault";
    }
    return "?";
}

std::optional<TraceKind> parse_trace_kind(std::string_view text) noexcept {
    for (auto k : kAllKinds) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

void TraceLog::set_tick(Tick tick) {
    if (tick != tick_) next_seq_ = 0;
    tick_ = tick;
}

void TraceLog::emit(std::string node, TraceKind kind, nlohmann::json details) {
    events_.push_back({tick_, next_seq_++, std::move(node), kind, std::move(details)});
}

std::string to_json_line(const TraceEvent& event) {
    // nlohmann::json objects are std::map backed, so keys serialize sorted.
    nlohmann::json j;
    j["tick"] = event.tick;
    j["seq"] = event.seq;
    j["node"] = event.node;
    j["kind"] = to_string(event.kind);
    j["details"] = event.details;
    return j.dump();
}

TraceEvent parse_json_line(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        TraceEvent e;
        e.tick = j.at("tick").get<Tick>();
        e.seq = j.at("seq").get<std::uint32_t>();
        e.node = j.at("node").get<std::string>();
        const auto kind = parse_trace_kind(j.at("kind").get<std::string>());
        if (!kind) fail(Errc::parse_error, "unknown trace kind in: " + std::string(line));
        e.kind = *kind;
        e.details = j.at("details");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        fail(Errc::parse_error, ex.what());
    }
}

void write_trace(const Trace& trace, std::ostream& out) {
    for (const auto& e : trace) out << to_json_line(e) << '\n';
}

void export_trace(const Trace& trace, const std::filesystem::path& destination) {
    std::ofstream out(destination, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_error, "cannot open '" + destination.string() + "' for writing");
    write_trace(trace, out);
    out.flush();
    if (!out) fail(Errc::io_error, "write to '" + destination.string() + "' failed");
}

Trace parse_trace(std::istream& in) {
    Trace trace;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        trace.push_back(parse_json_line(line));
    }
    return trace;
}

}  // namespace eea
