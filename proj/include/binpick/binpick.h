#ifndef BINPICK_H
#define BINPICK_H

/* C interface to the bin-picking lab. Every call returns a bp_status; on
 * failure bp_last_error() holds a message for the calling thread. Handles are
 * opaque and owned by the caller until passed to the matching *_free. */

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define BP_API __declspec(dllexport)
#else
#define BP_API __attribute__((visibility("default")))
#endif

typedef enum bp_status {
  BP_OK = 0,
  BP_INVALID_ARGUMENT = 1,
  BP_INVALID_CONFIG = 2,
  BP_GENERATION_FAILED = 3,
  BP_IO = 4,
  BP_PARSE = 5,
  BP_INTERNAL = 6
} bp_status;

typedef struct bp_config bp_config;
typedef struct bp_scene bp_scene;

typedef struct bp_trial_summary {
  int success;
  int action_count;
  int singulation_count;
  int rough_grasp_count;
  int picked_count;
  /* Empty string when the trial succeeded. */
  char failure_reason[32];
} bp_trial_summary;

BP_API const char* bp_version(void);
BP_API const char* bp_status_string(bp_status status);
/* Message of the last failed call on this thread ("" if none). */
BP_API const char* bp_last_error(void);

/* Frees strings returned through char** out-parameters. */
BP_API void bp_string_free(char* s);

BP_API bp_status bp_config_default(bp_config** out);
/* path may be NULL: then $BINPICK_CONFIG is used if set, else the defaults. */
BP_API bp_status bp_config_load(const char* path, bp_config** out);
BP_API bp_status bp_config_parse(const char* json_text, bp_config** out);
BP_API bp_status bp_config_dump(const bp_config* cfg, char** out_json);
BP_API void bp_config_free(bp_config* cfg);

/* shape: "disk", "polygon" or "mixed". */
BP_API bp_status bp_scene_generate(const bp_config* cfg, int objects, const char* shape, uint64_t seed,
                                   bp_scene** out);
BP_API bp_status bp_scene_load(const char* path, bp_scene** out);
BP_API bp_status bp_scene_save(const bp_scene* scene, const char* path);
BP_API bp_status bp_scene_item_count(const bp_scene* scene, int* out);
BP_API void bp_scene_free(bp_scene* scene);

/* Runs one trial (mode "two-stage" or "one-stage") and, if csv_path is not
 * NULL, writes its record as a one-row CSV. summary may be NULL. */
BP_API bp_status bp_run_trial(const bp_config* cfg, const bp_scene* scene, const char* mode, uint64_t seed,
                              const char* csv_path, bp_trial_summary* summary);

/* suite: "singulation" or "pipeline". trials <= 0 keeps the configured count;
 * threads <= 0 uses every core. Writes the per-trial CSV and the summary JSON;
 * summary_path may be NULL. */
BP_API bp_status bp_run_bench(const bp_config* cfg, const char* suite, int trials, uint64_t seed, int threads,
                              const char* csv_path, const char* summary_path, int* out_rows);

/* what: "density" writes density.pgm, density.csv and dots.pgm; "masks"
 * writes masks.pgm. region: "bin" or "tray". Files go into out_dir. */
BP_API bp_status bp_render(const bp_config* cfg, const bp_scene* scene, const char* what, const char* region,
                           const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* BINPICK_H */
