#ifndef HELIODISPATCH_H
#define HELIODISPATCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum HdStatus {
  HdStatus_Ok = 0,
  HdStatus_ConfigError = 1,
  HdStatus_ParseError = 2,
  HdStatus_ModelError = 3,
  HdStatus_SolverError = 4,
  HdStatus_NoSolution = 5,
  HdStatus_IoError = 6,
  HdStatus_NullPointer = 7,
  HdStatus_Panic = 8,
} HdStatus;

typedef struct HdConfig HdConfig;

typedef struct HdPlan HdPlan;

typedef struct HdWeather HdWeather;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread; empty string when no
 * failure has occurred. The pointer stays valid until the next failing call
 * on the same thread.
 */
const char *hd_last_error_message(void);

/**
 * Default configuration (reference plant, synthetic weather, two-tier
 * prices). Never fails.
 */
struct HdConfig *hd_config_default(void);

/**
 * Parses and validates a configuration from JSON; null `out` or JSON is an
 * error.
 */
enum HdStatus hd_config_from_json(const char *json, struct HdConfig **out);

void hd_config_free(struct HdConfig *config);

/**
 * Builds a synthetic weather trajectory of `days` consecutive days from the
 * config's sky model and seed.
 */
enum HdStatus hd_weather_synthetic(const struct HdConfig *config,
                                   uintptr_t days,
                                   struct HdWeather **out);

/**
 * Number of steps in a weather trajectory; 0 for null.
 */
uintptr_t hd_weather_len(const struct HdWeather *weather);

void hd_weather_free(struct HdWeather *weather);

enum HdStatus hd_plan_from_json(const struct HdConfig *config,
                                const char *json,
                                struct HdPlan **out);

/**
 * Serializes a plan to JSON. Release the string with `hd_string_free`.
 */
char *hd_plan_to_json(const struct HdPlan *plan);

void hd_plan_free(struct HdPlan *plan);

void hd_string_free(char *s);

/**
 * Deterministic optimization against the given weather (the
 * perfect-knowledge plan).
 */
enum HdStatus hd_optimize(const struct HdConfig *config,
                          const struct HdWeather *weather,
                          struct HdPlan **out);

/**
 * Simulates a plan against weather; writes the discounted profit to
 * `out_profit`.
 */
enum HdStatus hd_simulate(const struct HdConfig *config,
                          const struct HdPlan *plan,
                          const struct HdWeather *weather,
                          double *out_profit);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HELIODISPATCH_H */
