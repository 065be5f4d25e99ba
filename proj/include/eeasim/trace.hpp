#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "eeasim/types.hpp"

namespace eea {

enum class TraceKind {
    bus_tx,
    bus_rx,
    sd_offer,
    sd_find,
    sd_subscribe,
    evt_pub,
    evt_recv,
    method_req,
    method_resp,
    field_set,
    app_state,
    gw_route,
    gw_drop,
    fault,
};

std::string_view to_string(TraceKind kind) noexcept;
std::optional<TraceKind> parse_trace_kind(std::string_view text) noexcept;

struct TraceEvent {
    Tick tick = 0;
    std::uint32_t seq = 0;
    std::string node;
    TraceKind kind = TraceKind::fault;
    nlohmann::json details = nlohmann::json::object();

    bool operator==(const TraceEvent&) const = default;
};

using Trace = std::vector<TraceEvent>;

// Assigns (tick, seq) in emission order; seq restarts at 0 every tick.
class TraceLog {
public:
    void set_tick(Tick tick);
    Tick tick() const { return tick_; }

    void emit(std::string node, TraceKind kind, nlohmann::json details = nlohmann::json::object());

    const Trace& events() const { return events_; }
    Trace take() { return std::exchange(events_, {}); }

private:
    Tick tick_ = 0;
    std::uint32_t next_seq_ = 0;
    Trace events_;
};

/// One JSON object, keys sorted, no trailing newline.
std::string to_json_line(const TraceEvent& event);
TraceEvent parse_json_line(std::string_view line);

void write_trace(const Trace& trace, std::ostream& out);
/// Throws IoError.
void export_trace(const Trace& trace, const std::filesystem::path& destination);
/// Blank lines are skipped. Throws ParseError.
Trace parse_trace(std::istream& in);

}  // namespace eea
