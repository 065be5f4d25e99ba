#pragma once

#include <memory>
#include <optional>
#include <string>

#include "eeasim/exec.hpp"
#include "eeasim/gateway.hpp"
#include "eeasim/scenario.hpp"
#include "eeasim/service.hpp"
#include "eeasim/trace.hpp"

namespace eea {

struct RunResult {
    Trace trace;
    std::size_t faults = 0;
};

// Deterministic logical-clock scheduler. Each tick runs, in order:
//   1. startup (tick 0 only), nodes by ascending id
//   2. stimuli due this tick, by node id then declaration order
//   3. deliveries: bus frames, then network datagrams, into per-node inboxes
//   4. node handlers by ascending node id (inbox, then periodic work)
// Every hop (bus or network) takes exactly one tick. Handler errors become
// `fault` trace events; the run continues.
class Simulator {
public:
    /// The config must already be valid (see validate_scenario).
    explicit Simulator(const ScenarioConfig& config);
    ~Simulator();
    Simulator(const Simulator&) = delete;
    Simulator& operator=(const Simulator&) = delete;

    /// Executes the next tick. Returns false once the duration is exhausted.
    bool step();
    Tick next_tick() const;
    bool finished() const;

    /// Runs every remaining tick and returns the full trace.
    RunResult run();

    const Trace& trace() const;

    ServiceNetwork& network();
    const ExecutionManager* execution_manager(const std::string& node) const;
    const ClassicEcu* classic_ecu(const std::string& node) const;
    std::optional<GatewayCounters> gateway_counters(const std::string& node) const;
    /// Latest values a classic node decoded from received frames.
    std::optional<SignalValues> received_signals(const std::string& node, std::uint32_t frame_id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience: Simulator(config).run().
RunResult run(const ScenarioConfig& config);

}  // namespace eea
