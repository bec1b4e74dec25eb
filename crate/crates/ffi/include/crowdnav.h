#ifndef CROWDNAV_H
#define CROWDNAV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CnStatus {
  CN_STATUS_OK = 0,
  CN_STATUS_NULL_POINTER = 1,
  CN_STATUS_INVALID_ARGUMENT = 2,
  CN_STATUS_CONFIG = 3,
  CN_STATUS_RUNTIME = 4,
  CN_STATUS_PANIC = 5,
} CnStatus;

typedef enum CnScenarioKind {
  CN_SCENARIO_KIND_CORRIDOR = 0,
  CN_SCENARIO_KIND_INTERSECTION = 1,
  CN_SCENARIO_KIND_BOTTLENECK = 2,
  CN_SCENARIO_KIND_OPEN = 3,
} CnScenarioKind;

typedef enum CnDirection {
  CN_DIRECTION_DOWNSTREAM = 0,
  CN_DIRECTION_UPSTREAM = 1,
} CnDirection;

typedef enum CnPlanner {
  /**
   * Both disturbance penalties enabled.
   */
  CN_PLANNER_FULL = 0,
  /**
   * Progress and safety only.
   */
  CN_PLANNER_BASELINE = 1,
} CnPlanner;

typedef enum CnOutcome {
  CN_OUTCOME_RUNNING = 0,
  CN_OUTCOME_SUCCESS = 1,
  CN_OUTCOME_COLLISION = 2,
  CN_OUTCOME_TIMEOUT = 3,
} CnOutcome;

/**
 * A closed-loop episode in progress.
 */
typedef struct CnSimulation CnSimulation;

typedef struct CnScenario {
  enum CnScenarioKind kind;
  enum CnDirection direction;
  uint32_t ped_count;
  uint64_t seed;
  /**
   * Seconds; zero or negative selects the default limit.
   */
  double time_limit;
} CnScenario;

typedef struct CnMetrics {
  double complete_ratio;
  bool success;
  bool timeout;
  bool collision;
  uint32_t freezing_count;
  double jerk;
  uint32_t frontal_interactions;
  double cumulative_density;
  double execute_time;
} CnMetrics;

typedef struct CnRobot {
  double x;
  double y;
  double heading;
  double speed;
  double time;
} CnRobot;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failure on this thread, or null if the last
 * call succeeded. Valid until the next call into this library.
 */
const char *cn_last_error(void);

/**
 * Spawns a scenario and writes a new handle to `out`.
 *
 * # Safety
 * `scenario` must point to a valid `CnScenario`; `out` must be writable.
 */
enum CnStatus cn_simulation_new(const struct CnScenario *scenario,
                                enum CnPlanner planner,
                                struct CnSimulation **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from `cn_simulation_new` not yet freed.
 */
void cn_simulation_free(struct CnSimulation *sim);

/**
 * Advances one physics step (0.05 s). `outcome` may be null.
 *
 * # Safety
 * `sim` must be a live handle; `outcome` must be null or writable.
 */
enum CnStatus cn_simulation_step(struct CnSimulation *sim, enum CnOutcome *outcome);

/**
 * Steps until the episode ends and writes its metrics. `metrics` may be
 * null.
 *
 * # Safety
 * `sim` must be a live handle; `metrics` must be null or writable.
 */
enum CnStatus cn_simulation_run(struct CnSimulation *sim, struct CnMetrics *metrics);

/**
 * Current robot state.
 *
 * # Safety
 * `sim` must be a live handle; `robot` must be writable.
 */
enum CnStatus cn_simulation_robot(const struct CnSimulation *sim, struct CnRobot *robot);

/**
 * Writes up to `capacity` pedestrian positions as x, y pairs into `xy`
 * (which must hold `2 * capacity` doubles) and the total count to `count`.
 * Pass a null `xy` to query the count only.
 *
 * # Safety
 * `sim` must be a live handle; `count` must be writable; `xy` must be null
 * or valid for `2 * capacity` writes.
 */
enum CnStatus cn_simulation_pedestrians(const struct CnSimulation *sim,
                                        double *xy,
                                        size_t capacity,
                                        size_t *count);

/**
 * Runs a complete episode and writes its metrics.
 *
 * # Safety
 * `scenario` must point to a valid `CnScenario`; `metrics` must be writable.
 */
enum CnStatus cn_episode_run(const struct CnScenario *scenario,
                             enum CnPlanner planner,
                             struct CnMetrics *metrics);

/**
 * Transport distance between two weighted trajectory bundles.
 *
 * Each bundle is `count` trajectories of `len` points stored row-major as
 * x, y pairs; weights may be null for uniform weights. Both bundles share
 * the time step `dt`.
 *
 * # Safety
 * `a` and `b` must be valid for `2 * count * len` reads, the weight arrays
 * null or valid for `count` reads, and `out` writable.
 */
enum CnStatus cn_wasserstein(const double *a,
                             const double *a_weights,
                             size_t a_count,
                             const double *b,
                             const double *b_weights,
                             size_t b_count,
                             size_t len,
                             double dt,
                             double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CROWDNAV_H */
