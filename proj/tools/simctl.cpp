// Command-line front end. Talks to the simulator through the C interface only.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "eeasim/eeasim.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitFault = 2;
constexpr int kExitUsage = 64;

void print_warnings(const eea_scenario* scenario) {
    for (size_t i = 0; i < eea_scenario_warning_count(scenario); ++i) {
        std::cerr << "warning: " << eea_scenario_warning(scenario, i) << '\n';
    }
}

int report_load_failure(eea_status status, const std::string& path) {
    std::cerr << path << ": " << eea_status_name(status) << '\n' << eea_last_error() << '\n';
    return kExitInvalid;
}

int cmd_validate(const std::string& path) {
    eea_scenario* scenario = nullptr;
    const auto status = eea_scenario_load_file(path.c_str(), &scenario);
    if (status != EEA_OK) return report_load_failure(status, path);
    print_warnings(scenario);
    std::cout << path << ": ok\n";
    eea_scenario_free(scenario);
    return kExitOk;
}

int cmd_run(const std::string& path, const std::string& trace_path, std::optional<std::uint64_t> ticks,
            std::optional<std::uint64_t> seed) {
    eea_scenario* scenario = nullptr;
    auto status = eea_scenario_load_file(path.c_str(), &scenario);
    if (status != EEA_OK) return report_load_failure(status, path);
    print_warnings(scenario);
    if (ticks && eea_scenario_set_duration(scenario, *ticks) != EEA_OK) {
        std::cerr << eea_last_error() << '\n';
        eea_scenario_free(scenario);
        return kExitUsage;
    }
    if (seed) eea_scenario_set_seed(scenario, *seed);

    eea_trace* trace = nullptr;
    status = eea_run(scenario, &trace);
    eea_scenario_free(scenario);
    if (status != EEA_OK) {
        std::cerr << "run failed: " << eea_last_error() << '\n';
        return kExitFault;
    }
    status = eea_trace_export(trace, trace_path.c_str());
    const auto events = eea_trace_size(trace);
    const auto faults = eea_trace_fault_count(trace);
    eea_trace_free(trace);
    if (status != EEA_OK) {
        std::cerr << "cannot write trace: " << eea_last_error() << '\n';
        return kExitFault;
    }
    std::cout << events << " events written to " << trace_path << '\n';
    if (faults > 0) {
        std::cerr << faults << " runtime fault(s) recorded in the trace\n";
        return kExitFault;
    }
    return kExitOk;
}

int cmd_asil(const std::string& s, const std::string& e, const std::string& c, bool relax) {
    eea_asil level = EEA_ASIL_QM;
    if (eea_asil_determine(s.c_str(), e.c_str(), c.c_str(), relax ? 1 : 0, &level) != EEA_OK) {
        std::cerr << eea_last_error() << '\n';
        return kExitUsage;
    }
    std::cout << eea_asil_name(level) << '\n';
    return kExitOk;
}

int cmd_asil_batch(const std::string& path, bool relax) {
    eea_hazard_report* report = nullptr;
    const auto status = eea_hazards_classify_file(path.c_str(), relax ? 1 : 0, &report);
    if (status != EEA_OK) {
        std::cerr << path << ": " << eea_last_error() << '\n';
        return kExitInvalid;
    }
    std::cout << "id,asil,duplicate_id\n";
    for (size_t i = 0; i < eea_hazard_report_size(report); ++i) {
        const char* id = nullptr;
        eea_asil level = EEA_ASIL_QM;
        int duplicate = 0;
        eea_hazard_report_entry(report, i, &id, &level, &duplicate);
        std::cout << id << ',' << eea_asil_name(level) << ',' << (duplicate ? "yes" : "no") << '\n';
    }
    std::cout << '\n';
    for (int l = EEA_ASIL_QM; l <= EEA_ASIL_D; ++l) {
        const auto level = static_cast<eea_asil>(l);
        std::cout << eea_asil_name(level) << ": " << eea_hazard_report_count(report, level) << '\n';
    }
    eea_hazard_report_free(report);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual E/E architecture simulator"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string trace_path;
    std::optional<std::uint64_t> ticks;
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run a scenario and export its trace");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--trace", trace_path, "Output JSON-Lines trace")->required();
    run->add_option("--ticks", ticks, "Override the scenario duration")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Override the scenario seed");

    auto* validate = app.add_subcommand("validate", "Check a scenario and list every error");
    validate->add_option("--scenario", scenario_path, "Scenario JSON file")->required();

    std::string severity;
    std::string exposure;
    std::string controllability;
    bool relax = false;
    auto* asil = app.add_subcommand("asil", "Classify one severity/exposure/controllability triple");
    asil->add_option("--severity", severity, "S1..S3")->required();
    asil->add_option("--exposure", exposure, "E1..E4")->required();
    asil->add_option("--controllability", controllability, "C1..C3")->required();
    asil->add_flag("--relax-s3e1c3", relax, "Resolve the S3/E1/C3 cell to QM instead of A");

    std::string csv_path;
    auto* batch = app.add_subcommand("asil-batch", "Classify every hazard in a CSV file");
    batch->add_option("--csv", csv_path, "CSV with id,description,severity,exposure,controllability")->required();
    batch->add_flag("--relax-s3e1c3", relax, "Resolve the S3/E1/C3 cell to QM instead of A");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    if (*run) return cmd_run(scenario_path, trace_path, ticks, seed);
    if (*validate) return cmd_validate(scenario_path);
    if (*asil) return cmd_asil(severity, exposure, controllability, relax);
    return cmd_asil_batch(csv_path, relax);
}
