#ifndef TRANSTECH_H
#define TRANSTECH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TtStatus {
  TT_STATUS_OK = 0,
  TT_STATUS_NULL_POINTER = 1,
  TT_STATUS_INVALID_ARGUMENT = 2,
  TT_STATUS_IO = 3,
  TT_STATUS_PARSE = 4,
  TT_STATUS_RESOURCE = 5,
  TT_STATUS_UNLABELABLE = 6,
  TT_STATUS_CHECKPOINT = 7,
  TT_STATUS_MODEL = 8,
  TT_STATUS_PANIC = 99,
} TtStatus;

// A trained single-head model with the resources its features need.
typedef struct TtModel TtModel;

// Rule resources loaded from a directory.
typedef struct TtResources TtResources;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until
// the next call on the same thread.
const char *tt_last_error(void);

// Library version; static, do not free.
const char *tt_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not have been freed.
void tt_string_free(char *s);

// # Safety
// `dir` must be a NUL-terminated string; `out` a valid pointer.
enum TtStatus tt_resources_load(const char *dir, struct TtResources **out);

// # Safety
// `res` must come from [`tt_resources_load`] and not have been freed.
void tt_resources_free(struct TtResources *res);

// Rule-based technique label of one JSON record, e.g. `"TRA"`.
//
// # Safety
// Pointers must be valid; `record_json` NUL-terminated.
enum TtStatus tt_classify(const struct TtResources *res, const char *record_json, char **out_label);

// Loads a checkpoint. `embeddings` may be null unless the model was
// trained with embedding features.
//
// # Safety
// Strings must be NUL-terminated; `out` a valid pointer.
enum TtStatus tt_model_load(const char *checkpoint,
                            const char *resources_dir,
                            const char *embeddings,
                            struct TtModel **out);

// # Safety
// `model` must come from [`tt_model_load`] and not have been freed.
void tt_model_free(struct TtModel *model);

// Predicted label of the model's first head and its probability.
//
// # Safety
// Pointers must be valid; `record_json` NUL-terminated. `out_probability`
// may be null.
enum TtStatus tt_model_predict(const struct TtModel *model,
                               const char *record_json,
                               char **out_label,
                               double *out_probability);

// F1 from raw counts; 0 when undefined.
//
// # Safety
// `out` must be a valid pointer.
enum TtStatus tt_f1(uint64_t tp, uint64_t fp, uint64_t fn_, double *out);

// Cosine similarity of two vectors of length `len`.
//
// # Safety
// `u` and `v` must point to `len` doubles; `out` must be valid.
enum TtStatus tt_cosine(const double *u, const double *v, size_t len, double *out);

// `alpha * l1 + beta * l2`; `alpha` must be positive, `beta` non-negative,
// and the two must sum to 1.
//
// # Safety
// `out` must be a valid pointer.
enum TtStatus tt_multitask_loss(double l1, double l2, double alpha, double beta, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TRANSTECH_H */
