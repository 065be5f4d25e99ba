#include "eeasim/eeasim.h"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "eeasim/error.hpp"
#include "eeasim/safety.hpp"
#include "eeasim/scenario.hpp"
#include "eeasim/simulator.hpp"
#include "eeasim/trace.hpp"

struct eea_scenario {
    eea::LoadedScenario loaded;
};

struct eea_trace {
    eea::Trace events;
    std::size_t faults = 0;
    mutable std::vector<std::string> lines;  // rendered lazily
};

struct eea_hazard_report {
    eea::HazardReport report;
};

namespace {

thread_local std::string last_error;

eea_status set_error(eea_status status, std::string message) {
    last_error = std::move(message);
    return status;
}

eea_status status_for(eea::Errc code) {
    switch (code) {
        case eea::Errc::parse_error: return EEA_ERR_PARSE;
        case eea::Errc::validation_errors: return EEA_ERR_VALIDATION;
        case eea::Errc::io_error: return EEA_ERR_IO;
        default: return EEA_ERR_RUNTIME;
    }
}

template <typename F>
eea_status guarded(F&& f) {
    last_error.clear();
    try {
        return f();
    } catch (const eea::ValidationErrors& e) {
        std::string joined;
        for (const auto& msg : e.errors()) {
            if (!joined.empty()) joined += '\n';
            joined += msg;
        }
        return set_error(EEA_ERR_VALIDATION, joined);
    } catch (const eea::Error& e) {
        return set_error(status_for(e.code()), e.what());
    } catch (const std::exception& e) {
        return set_error(EEA_ERR_RUNTIME, e.what());
    } catch (...) {
        return set_error(EEA_ERR_RUNTIME, "unknown error");
    }
}

}  // namespace

extern "C" {

const char* eea_version(void) { return "0.1.0"; }

const char* eea_status_name(eea_status status) {
    switch (status) {
        case EEA_OK: return "ok";
        case EEA_ERR_INVALID_ARGUMENT: return "invalid argument";
        case EEA_ERR_PARSE: return "parse error";
        case EEA_ERR_VALIDATION: return "validation error";
        case EEA_ERR_IO: return "io error";
        case EEA_ERR_RUNTIME: return "runtime error";
    }
    return "unknown status";
}

const char* eea_last_error(void) { return last_error.c_str(); }

eea_status eea_scenario_load_file(const char* path, eea_scenario** out) {
    if (path == nullptr || out == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new eea_scenario{eea::load_scenario_file(path)};
        return EEA_OK;
    });
}

eea_status eea_scenario_load_json(const char* text, size_t length, eea_scenario** out) {
    if (text == nullptr || out == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        *out = new eea_scenario{eea::load_scenario(std::string_view(text, length))};
        return EEA_OK;
    });
}

void eea_scenario_free(eea_scenario* scenario) { delete scenario; }

eea_status eea_scenario_set_duration(eea_scenario* scenario, uint64_t ticks) {
    if (scenario == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null scenario");
    if (ticks == 0) return set_error(EEA_ERR_INVALID_ARGUMENT, "duration must be at least 1 tick");
    scenario->loaded.config.duration = ticks;
    return EEA_OK;
}

eea_status eea_scenario_set_seed(eea_scenario* scenario, uint64_t seed) {
    if (scenario == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null scenario");
    scenario->loaded.config.seed = seed;
    return EEA_OK;
}

uint64_t eea_scenario_duration(const eea_scenario* scenario) {
    return scenario == nullptr ? 0 : scenario->loaded.config.duration;
}

size_t eea_scenario_warning_count(const eea_scenario* scenario) {
    return scenario == nullptr ? 0 : scenario->loaded.warnings.size();
}

const char* eea_scenario_warning(const eea_scenario* scenario, size_t index) {
    if (scenario == nullptr || index >= scenario->loaded.warnings.size()) return nullptr;
    return scenario->loaded.warnings[index].c_str();
}

eea_status eea_run(const eea_scenario* scenario, eea_trace** out) {
    if (scenario == nullptr || out == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        auto result = eea::run(scenario->loaded.config);
        *out = new eea_trace{std::move(result.trace), result.faults, {}};
        return EEA_OK;
    });
}

size_t eea_trace_size(const eea_trace* trace) { return trace == nullptr ? 0 : trace->events.size(); }

size_t eea_trace_fault_count(const eea_trace* trace) { return trace == nullptr ? 0 : trace->faults; }

const char* eea_trace_event_json(const eea_trace* trace, size_t index) {
    if (trace == nullptr || index >= trace->events.size()) return nullptr;
    if (trace->lines.empty()) {
        trace->lines.reserve(trace->events.size());
        for (const auto& e : trace->events) trace->lines.push_back(eea::to_json_line(e));
    }
    return trace->lines[index].c_str();
}

eea_status eea_trace_export(const eea_trace* trace, const char* path) {
    if (trace == nullptr || path == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        eea::export_trace(trace->events, path);
        return EEA_OK;
    });
}

void eea_trace_free(eea_trace* trace) { delete trace; }

eea_status eea_asil_determine(const char* severity, const char* exposure, const char* controllability,
                              int relax_s3e1c3, eea_asil* out) {
    if (severity == nullptr || exposure == nullptr || controllability == nullptr || out == nullptr) {
        return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    }
    const auto s = eea::parse_severity(severity);
    const auto e = eea::parse_exposure(exposure);
    const auto c = eea::parse_controllability(controllability);
    if (!s) return set_error(EEA_ERR_INVALID_ARGUMENT, std::string("bad severity '") + severity + "'");
    if (!e) return set_error(EEA_ERR_INVALID_ARGUMENT, std::string("bad exposure '") + exposure + "'");
    if (!c) return set_error(EEA_ERR_INVALID_ARGUMENT, std::string("bad controllability '") + controllability + "'");
    *out = static_cast<eea_asil>(eea::determine_asil(*s, *e, *c, relax_s3e1c3 != 0));
    return EEA_OK;
}

const char* eea_asil_name(eea_asil level) {
    switch (level) {
        case EEA_ASIL_QM: return "QM";
        case EEA_ASIL_A: return "A";
        case EEA_ASIL_B: return "B";
        case EEA_ASIL_C: return "C";
        case EEA_ASIL_D: return "D";
    }
    return "?";
}

eea_status eea_hazards_classify_file(const char* csv_path, int relax_s3e1c3, eea_hazard_report** out) {
    if (csv_path == nullptr || out == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null argument");
    return guarded([&] {
        std::ifstream in(csv_path, std::ios::binary);
        if (!in) eea::fail(eea::Errc::io_error, std::string("cannot open '") + csv_path + "'");
        const auto records = eea::read_hazards_csv(in);
        *out = new eea_hazard_report{eea::classify_batch(records, relax_s3e1c3 != 0)};
        return EEA_OK;
    });
}

size_t eea_hazard_report_size(const eea_hazard_report* report) {
    return report == nullptr ? 0 : report->report.entries.size();
}

eea_status eea_hazard_report_entry(const eea_hazard_report* report, size_t index, const char** id, eea_asil* level,
                                   int* duplicate_id) {
    if (report == nullptr) return set_error(EEA_ERR_INVALID_ARGUMENT, "null report");
    if (index >= report->report.entries.size()) return set_error(EEA_ERR_INVALID_ARGUMENT, "index out of range");
    const auto& entry = report->report.entries[index];
    if (id != nullptr) *id = entry.id.c_str();
    if (level != nullptr) *level = static_cast<eea_asil>(entry.level);
    if (duplicate_id != nullptr) *duplicate_id = entry.duplicate_id ? 1 : 0;
    return EEA_OK;
}

size_t eea_hazard_report_count(const eea_hazard_report* report, eea_asil level) {
    if (report == nullptr || level < EEA_ASIL_QM || level > EEA_ASIL_D) return 0;
    return report->report.count(static_cast<eea::AsilLevel>(level));
}

void eea_hazard_report_free(eea_hazard_report* report) { delete report; }

}  // extern "C"
