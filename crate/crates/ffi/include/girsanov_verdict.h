#ifndef GIRSANOV_VERDICT_H
#define GIRSANOV_VERDICT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Outcome of a library call.
typedef enum GvStatus {
  GV_STATUS_OK = 0,
  GV_STATUS_NULL_POINTER = 1,
  GV_STATUS_INVALID_UTF8 = 2,
  GV_STATUS_PARSE_ERROR = 3,
  GV_STATUS_INVALID_FIELD = 4,
  GV_STATUS_EVAL_ERROR = 5,
  GV_STATUS_CLASSIFY_ERROR = 6,
  GV_STATUS_RUN_ERROR = 7,
  GV_STATUS_PANIC = 8,
} GvStatus;

// State space of a one-dimensional field.
typedef enum GvDomain {
  GV_DOMAIN_REAL_LINE = 0,
  GV_DOMAIN_POSITIVE_HALF_LINE = 1,
} GvDomain;

// Three-valued verdict.
typedef enum GvTri {
  GV_TRI_NO = 0,
  GV_TRI_YES = 1,
  GV_TRI_INCONCLUSIVE = 2,
} GvTri;

// Opaque parsed expression.
typedef struct GvExpression GvExpression;

// Opaque coefficient field.
typedef struct GvField GvField;

// Local and global verdicts with the six battery conditions in the order
// plus1, plus2, plus3, minus1, minus2, minus3.
typedef struct GvAcVerdict {
  enum GvTri local_ac;
  enum GvTri global_ac;
  enum GvTri beta_zero;
  enum GvTri battery[6];
} GvAcVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next library call on this thread.
const char *gv_last_error(void);

// Library version as a static NUL-terminated string.
const char *gv_version(void);

// Parse an expression.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a valid pointer.
enum GvStatus gv_expression_parse(const char *source, struct GvExpression **out);

// Evaluate at `point[0..len]` and time `t`.
//
// # Safety
// `expr` must come from [`gv_expression_parse`]; `point` must hold `len`
// values (it may be null when `len` is 0); `out` must be valid.
enum GvStatus gv_expression_eval(const struct GvExpression *expr,
                                 const double *point,
                                 size_t len,
                                 double t,
                                 double *out);

// Release an expression; null is ignored.
//
// # Safety
// `expr` must be null or come from [`gv_expression_parse`], and not be
// used afterwards.
void gv_expression_free(struct GvExpression *expr);

// Build a one-dimensional field from expression texts in `x`.
//
// # Safety
// The strings must be NUL-terminated and `out` valid.
enum GvStatus gv_field_new_1d(enum GvDomain domain,
                              const char *b,
                              const char *c,
                              const char *beta,
                              double x0,
                              struct GvField **out);

// Build a field of any dimension from its JSON description (the `field`
// object of a run configuration).
//
// # Safety
// `json` must be NUL-terminated and `out` valid.
enum GvStatus gv_field_from_json(const char *json, struct GvField **out);

// Release a field; null is ignored.
//
// # Safety
// `field` must be null or come from a `gv_field_*` constructor, and not be
// used afterwards.
void gv_field_free(struct GvField *field);

// Classify a one-dimensional field with default settings.
//
// # Safety
// `field` must be a live handle and `out` valid.
enum GvStatus gv_classify_1d(const struct GvField *field, struct GvAcVerdict *out);

// Local verdict with the roles of the two laws exchanged.
//
// # Safety
// `field` must be a live handle and `out` valid.
enum GvStatus gv_classify_reverse(const struct GvField *field, enum GvTri *out);

// Run a task from a JSON configuration and return the canonical JSON
// report. `task` may be null when the configuration names the task.
// `exit_code` receives 0 (pass), 2 (inconclusive) or 1 (fail).
//
// # Safety
// `config` must be NUL-terminated, `task` null or NUL-terminated, and the
// out-pointers valid. The report must be released with [`gv_string_free`].
enum GvStatus gv_run_json(const char *config, const char *task, char **report, int32_t *exit_code);

// Release a string returned by the library; null is ignored.
//
// # Safety
// `s` must be null or come from this library, and not be used afterwards.
void gv_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GIRSANOV_VERDICT_H */
