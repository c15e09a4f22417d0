/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface of the emovc shared library. Objects are opaque handles; every
 * call that can fail returns an emovc_status and leaves a message retrievable
 * with emovc_last_error() on the calling thread.
 */
#ifndef EMOVC_EMOVC_H
#define EMOVC_EMOVC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define EMOVC_API __declspec(dllexport)
#else
#define EMOVC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emovc_status {
  EMOVC_OK = 0,
  EMOVC_ERR_CONTRACT = 1,         /* precondition violated by the caller */
  EMOVC_ERR_NON_FINITE = 2,       /* NaN or infinity reached a loss or gradient */
  EMOVC_ERR_DEGENERATE = 3,       /* input leaves the computation undefined */
  EMOVC_ERR_CONFIGURATION = 4,    /* unknown key, bad value, inconsistent settings */
  EMOVC_ERR_IO = 5,               /* file missing, unreadable or unwritable */
  EMOVC_ERR_INSUFFICIENT = 6,     /* not enough data */
  EMOVC_ERR_UNDEFINED_METRIC = 7, /* metric undefined for this input */
  EMOVC_ERR_INTERNAL = 99         /* anything else */
} emovc_status;

typedef enum emovc_direction { EMOVC_A_TO_B = 0, EMOVC_B_TO_A = 1 } emovc_direction;

typedef struct emovc_config emovc_config;
typedef struct emovc_model emovc_model;

EMOVC_API const char* emovc_version(void);
/* Message of the last failed call on this thread ("" when none). */
EMOVC_API const char* emovc_last_error(void);
EMOVC_API const char* emovc_status_name(emovc_status status);

/* Run configuration: defaults for every key, then file and key=value overrides. */
EMOVC_API emovc_status emovc_config_create(emovc_config** out);
EMOVC_API void emovc_config_destroy(emovc_config* config);
EMOVC_API emovc_status emovc_config_set(emovc_config* config, const char* key, const char* value);
EMOVC_API emovc_status emovc_config_load(emovc_config* config, const char* path);
/* Copies the value (NUL terminated) into buf when it fits; *needed gets its length plus one. */
EMOVC_API emovc_status emovc_config_get(const emovc_config* config, const char* key, char* buf, size_t cap,
                                        size_t* needed);
EMOVC_API emovc_status emovc_config_hash(const emovc_config* config, uint64_t* out);
/* Number of known keys and their name / default / help text. */
EMOVC_API size_t emovc_config_key_count(void);
EMOVC_API emovc_status emovc_config_key_info(size_t index, const char** name, const char** default_value,
                                             const char** help);

/* Runs one pipeline stage: "synth-corpus", "extract", "train", "convert",
 * "evaluate", "report" or "experiment". Tables produced by evaluate, report
 * and experiment are printed to stdout. */
EMOVC_API emovc_status emovc_run(const char* command, const emovc_config* config);

/* Trained models. */
EMOVC_API emovc_status emovc_model_load(const char* path, emovc_model** out);
EMOVC_API void emovc_model_destroy(emovc_model* model);
/* Feature combination name, e.g. "mcc+lf0cwt+lecwt"; valid while the model lives. */
EMOVC_API const char* emovc_model_combo(const emovc_model* model);
/* Emotion label of side A (source of A_TO_B) and side B. */
EMOVC_API const char* emovc_model_emotion_a(const emovc_model* model);
EMOVC_API const char* emovc_model_emotion_b(const emovc_model* model);
EMOVC_API emovc_status emovc_model_convert_wav(const emovc_model* model, const char* input_wav, const char* output_wav,
                                               emovc_direction direction);

#ifdef __cplusplus
}
#endif

#endif /* EMOVC_EMOVC_H */
