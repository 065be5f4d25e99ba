/* Stable C interface to the simulator. All handles are opaque; every
 * fallible call returns an eea_status and leaves details in
 * eea_last_error(), which is thread-local and valid until the next call
 * on the same thread. */
#ifndef EEASIM_EEASIM_H
#define EEASIM_EEASIM_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EEA_API __declspec(dllexport)
#else
#define EEA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum eea_status {
    EEA_OK = 0,
    EEA_ERR_INVALID_ARGUMENT = 1,
    EEA_ERR_PARSE = 2,
    EEA_ERR_VALIDATION = 3,
    EEA_ERR_IO = 4,
    EEA_ERR_RUNTIME = 5
} eea_status;

typedef enum eea_asil {
    EEA_ASIL_QM = 0,
    EEA_ASIL_A = 1,
    EEA_ASIL_B = 2,
    EEA_ASIL_C = 3,
    EEA_ASIL_D = 4
} eea_asil;

typedef struct eea_scenario eea_scenario;
typedef struct eea_trace eea_trace;
typedef struct eea_hazard_report eea_hazard_report;

EEA_API const char* eea_version(void);
EEA_API const char* eea_status_name(eea_status status);
/* Validation failures are listed one per line. */
EEA_API const char* eea_last_error(void);

EEA_API eea_status eea_scenario_load_file(const char* path, eea_scenario** out);
EEA_API eea_status eea_scenario_load_json(const char* text, size_t length, eea_scenario** out);
EEA_API void eea_scenario_free(eea_scenario* scenario);
EEA_API eea_status eea_scenario_set_duration(eea_scenario* scenario, uint64_t ticks);
EEA_API eea_status eea_scenario_set_seed(eea_scenario* scenario, uint64_t seed);
EEA_API uint64_t eea_scenario_duration(const eea_scenario* scenario);
EEA_API size_t eea_scenario_warning_count(const eea_scenario* scenario);
EEA_API const char* eea_scenario_warning(const eea_scenario* scenario, size_t index);

EEA_API eea_status eea_run(const eea_scenario* scenario, eea_trace** out);
EEA_API size_t eea_trace_size(const eea_trace* trace);
EEA_API size_t eea_trace_fault_count(const eea_trace* trace);
/* The string stays valid until the trace is freed. */
EEA_API const char* eea_trace_event_json(const eea_trace* trace, size_t index);
EEA_API eea_status eea_trace_export(const eea_trace* trace, const char* path);
EEA_API void eea_trace_free(eea_trace* trace);

/* Levels are "S1".."S3", "E1".."E4", "C1".."C3", case-insensitive. */
EEA_API eea_status eea_asil_determine(const char* severity, const char* exposure, const char* controllability,
                                      int relax_s3e1c3, eea_asil* out);
EEA_API const char* eea_asil_name(eea_asil level);

EEA_API eea_status eea_hazards_classify_file(const char* csv_path, int relax_s3e1c3, eea_hazard_report** out);
EEA_API size_t eea_hazard_report_size(const eea_hazard_report* report);
EEA_API eea_status eea_hazard_report_entry(const eea_hazard_report* report, size_t index, const char** id,
                                           eea_asil* level, int* duplicate_id);
EEA_API size_t eea_hazard_report_count(const eea_hazard_report* report, eea_asil level);
EEA_API void eea_hazard_report_free(eea_hazard_report* report);

#ifdef __cplusplus
}
#endif

#endif
