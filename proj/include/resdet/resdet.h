/* C interface to the residual detection toolkit.
 *
 * Every call returns a resdet_status. On failure a description of the most
 * recent error on the calling thread is available from resdet_last_error().
 * Handles are opaque and must be released with the matching _free call.
 */
#ifndef RESDET_RESDET_H
#define RESDET_RESDET_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(RESDET_BUILDING)
#    define RESDET_API __declspec(dllexport)
#  else
#    define RESDET_API __declspec(dllimport)
#  endif
#else
#  define RESDET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum resdet_status {
  RESDET_OK = 0,
  RESDET_ERR_DIMENSION_MISMATCH = 1,
  RESDET_ERR_UNSTABLE_CLOSED_LOOP = 2,
  RESDET_ERR_NON_PSD_NOISE = 3,
  RESDET_ERR_NON_POSITIVE_STEP = 4,
  RESDET_ERR_SINGULAR_RESIDUAL_COVARIANCE = 5,
  RESDET_ERR_HORIZON_ZERO = 6,
  RESDET_ERR_NOT_HURWITZ = 7,
  RESDET_ERR_NOT_SCHUR = 8,
  RESDET_ERR_NUMERICALLY_SINGULAR = 9,
  RESDET_ERR_WRONG_PLANT_CLASS = 10,
  RESDET_ERR_DOMAIN = 11,
  RESDET_ERR_TRACE_TOO_SHORT = 12,
  RESDET_ERR_ZERO_PLANT_PARAMETER = 13,
  RESDET_ERR_MISSING_ATTACKER_KNOWLEDGE = 14,
  RESDET_ERR_NON_PSD = 15,
  RESDET_ERR_PARSE = 16,
  RESDET_ERR_SCHEMA = 17,
  RESDET_ERR_VALIDATION = 18,
  RESDET_ERR_IO = 19,
  RESDET_ERR_UNKNOWN_CASE = 20,
  RESDET_ERR_INVALID_ARGUMENT = 21,
  RESDET_ERR_INTERNAL = 22
} resdet_status;

typedef struct resdet_scenario resdet_scenario;
typedef struct resdet_report resdet_report;

RESDET_API const char* resdet_version(void);
RESDET_API const char* resdet_status_name(resdet_status status);
/* Message for the last failed call on this thread; "" if none. */
RESDET_API const char* resdet_last_error(void);
/* True for configuration errors (parse, schema, unknown case, I/O). */
RESDET_API int resdet_is_config_error(resdet_status status);

/* Chi-squared threshold for the given false-alarm rate and sensor count. */
RESDET_API resdet_status resdet_tune_threshold(double false_alarm_rate, int sensors,
                                               double* alpha);

RESDET_API resdet_status resdet_scenario_load(const char* path, resdet_scenario** out);
RESDET_API resdet_status resdet_scenario_parse(const char* text, resdet_scenario** out);
RESDET_API void resdet_scenario_free(resdet_scenario* scenario);
RESDET_API resdet_status resdet_scenario_set_seed(resdet_scenario* scenario, uint64_t seed);
RESDET_API resdet_status resdet_scenario_get_seed(const resdet_scenario* scenario,
                                                  uint64_t* seed);
/* Selects which data files resdet_run writes besides summary.json.
 * 1 enables, 0 disables, a negative value keeps the scenario's setting. */
RESDET_API resdet_status resdet_scenario_set_outputs(resdet_scenario* scenario, int trace,
                                                     int histogram, int raw_z);
/* Dimensions of the plant: n states, m inputs, p sensors. Any pointer may be NULL. */
RESDET_API resdet_status resdet_scenario_dims(const resdet_scenario* scenario, int* n, int* m,
                                              int* p);

/* Runs the scenario. out_dir may be NULL; otherwise the requested data files
 * and summary.json are written there (the directory is created). */
RESDET_API resdet_status resdet_run(const resdet_scenario* scenario, const char* out_dir,
                                    resdet_report** out);
/* Empirical L-infinity calibration of alpha_f for a y_f detector scenario. */
RESDET_API resdet_status resdet_calibrate_af(const resdet_scenario* scenario,
                                             double settle_time, double* alpha_f);
/* Runs a built-in reproduction case and writes its data files into out_dir. */
RESDET_API resdet_status resdet_reproduce(const char* case_id, const char* out_dir,
                                          resdet_report** out);

RESDET_API void resdet_report_free(resdet_report* report);
/* key=value text; owned by the report. */
RESDET_API const char* resdet_report_text(const resdet_report* report);
RESDET_API resdet_status resdet_report_alarm_rate(const resdet_report* report, double* rate);
RESDET_API resdet_status resdet_report_alarms(const resdet_report* report, uint64_t* alarms,
                                              uint64_t* counted_steps);

#ifdef __cplusplus
}
#endif

#endif /* RESDET_RESDET_H */
