/*
 * C interface to the spatial-temporal token filtering library.
 *
 * All entry points are thread-compatible: handles must not be shared across
 * threads without external synchronization, and stfm_last_error() returns a
 * thread-local message describing the most recent failure on the calling
 * thread.
 */
#ifndef STFM_H
#define STFM_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct stfm_config stfm_config; /* experiment configuration */
typedef struct stfm_result stfm_result; /* report produced by a run */

typedef enum stfm_status {
  STFM_OK = 0,
  STFM_ERR_INVALID_ARGUMENT = 1,
  STFM_ERR_DIMENSION = 2,
  STFM_ERR_CONFIG = 3,
  STFM_ERR_IO = 4,
  STFM_ERR_CHECKPOINT_FORMAT = 5,
  STFM_ERR_CHECKPOINT_VERSION = 6,
  STFM_ERR_CHECKPOINT_TRUNCATED = 7,
  STFM_ERR_CHECKPOINT_SHAPE = 8,
  STFM_ERR_DIVERGED = 9,
  STFM_ERR_INTERNAL = 10
} stfm_status;

const char* stfm_version(void);
const char* stfm_status_name(stfm_status status);
const char* stfm_last_error(void);

/* Configuration: starts from the library defaults. Keys are the kebab-case
 * field names ("frames", "alpha", "video-tokens", ...); values are parsed
 * and validated per field. */
stfm_config* stfm_config_new(void);
void stfm_config_free(stfm_config* cfg);
stfm_status stfm_config_set(stfm_config* cfg, const char* key, const char* value);
stfm_status stfm_config_get(const stfm_config* cfg, const char* key, char* buffer,
                            size_t capacity);
stfm_status stfm_config_load_file(stfm_config* cfg, const char* path);

/* Runs. out_dir may be NULL to skip writing files; every run hands back a
 * result holding the canonical report text. The caller owns the result. */
stfm_status stfm_run_train(const stfm_config* cfg, const char* out_dir,
                           stfm_result** out);
stfm_status stfm_run_ablation(const stfm_config* cfg, const char* out_dir,
                              stfm_result** out);
stfm_status stfm_run_token_sweep(const stfm_config* cfg, const char* out_dir,
                                 stfm_result** out);
stfm_status stfm_run_gradcheck(const stfm_config* cfg, stfm_result** out);

/* Renders the similarity matrix and attention map of one held-out instance
 * as CSV and PGM files under out_prefix. checkpoint_path may be NULL to use
 * freshly initialized parameters. */
stfm_status stfm_run_heatmap_dump(const stfm_config* cfg, const char* checkpoint_path,
                                  const char* out_prefix, stfm_result** out);

const char* stfm_result_report(const stfm_result* result);
double stfm_result_wall_clock_seconds(const stfm_result* result);
int stfm_result_passed(const stfm_result* result);
void stfm_result_free(stfm_result* result);

#ifdef __cplusplus
}
#endif

#endif /* STFM_H */
