#ifndef RELAYNAV_H
#define RELAYNAV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

typedef enum RnStatus {
  RN_STATUS_OK = 0,
  RN_STATUS_NULL_ARGUMENT = 1,
  RN_STATUS_INVALID_UTF8 = 2,
  RN_STATUS_PARSE = 3,
  RN_STATUS_IO = 4,
  RN_STATUS_INVALID_CONFIG = 5,
  RN_STATUS_REJECTED = 6,
  RN_STATUS_SIMULATION = 7,
  RN_STATUS_PANIC = 8,
} RnStatus;

typedef struct RnEpisode RnEpisode;

typedef struct RnRollout RnRollout;

typedef struct RnScene RnScene;

/**
 * Per-episode outcome, flat for C callers.
 */
typedef struct RnResult {
  bool success_fh;
  bool success_sh;
  bool both_success;
  double path_len_fh_m;
  double path_len_sh_m;
  double ne_fh_m;
  double ne_sh_m;
  uint32_t subtasks_done_fh;
  uint32_t subtasks_done_sh;
  uint32_t subtasks_total_fh;
  uint32_t subtasks_total_sh;
  uint64_t ticks;
  uint64_t swap_count;
  uint64_t dialogue_count;
} RnResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static string.
 */
const char *rn_version(void);

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread; empty when nothing failed yet.
 */
const char *rn_last_error(void);

/**
 * # Safety
 * `s` must come from a relaynav function returning an owned string, or be null.
 */
void rn_string_free(char *s);

/**
 * Generates a scene with default parameters.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum RnStatus rn_scene_generate(uint64_t seed, struct RnScene **out);

/**
 * Loads a scene file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RnStatus rn_scene_load(const char *path, struct RnScene **out);

/**
 * Scene as JSON, to be released with `rn_string_free`.
 *
 * # Safety
 * `scene` must be a live handle; `out` must be writable.
 */
enum RnStatus rn_scene_to_json(const struct RnScene *scene, char **out);

/**
 * # Safety
 * `scene` must come from a scene constructor, or be null.
 */
void rn_scene_free(struct RnScene *scene);

/**
 * Samples one verified episode. Returns `Rejected` when the scene cannot
 * host one for this seed.
 *
 * # Safety
 * `scene` must be live, `episode_id` NUL-terminated and `out` writable.
 */
enum RnStatus rn_episode_generate(const struct RnScene *scene,
                                  uint64_t seed,
                                  const char *episode_id,
                                  struct RnEpisode **out);

/**
 * Parses one episode record.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` writable.
 */
enum RnStatus rn_episode_from_json(const char *json, struct RnEpisode **out);

/**
 * # Safety
 * `episode` must be live; `out` writable.
 */
enum RnStatus rn_episode_to_json(const struct RnEpisode *episode, char **out);

/**
 * The episode's instruction, to be released with `rn_string_free`.
 *
 * # Safety
 * `episode` must be live; `out` writable.
 */
enum RnStatus rn_episode_instruction(const struct RnEpisode *episode, char **out);

/**
 * # Safety
 * `episode` must come from an episode constructor, or be null.
 */
void rn_episode_free(struct RnEpisode *episode);

/**
 * Runs one rollout. `config_json` may be null for defaults; otherwise it is
 * a JSON object with any subset of the rollout config fields.
 *
 * # Safety
 * Handles must be live, `config_json` null or NUL-terminated, `out` writable.
 */
enum RnStatus rn_rollout_run(const struct RnScene *scene,
                             const struct RnEpisode *episode,
                             const char *config_json,
                             struct RnRollout **out);

/**
 * # Safety
 * `rollout` must be live; `out` writable.
 */
enum RnStatus rn_rollout_result(const struct RnRollout *rollout, struct RnResult *out);

/**
 * Number of trace records (ticks) in the rollout, 0 for a null handle.
 *
 * # Safety
 * `rollout` must be live or null.
 */
uint64_t rn_rollout_trace_len(const struct RnRollout *rollout);

/**
 * The trace as JSON lines, to be released with `rn_string_free`.
 *
 * # Safety
 * `rollout` must be live; `out` writable.
 */
enum RnStatus rn_rollout_trace_json(const struct RnRollout *rollout, char **out);

/**
 * # Safety
 * `rollout` must come from `rn_rollout_run`, or be null.
 */
void rn_rollout_free(struct RnRollout *rollout);

/**
 * Success-weighted path length of one robot.
 */
double rn_spl(bool success, double gt_length_m, double path_length_m);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RELAYNAV_H */
