#ifndef RECIPEFORGE_H
#define RECIPEFORGE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RfStatus {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_ARGUMENT = 1,
  RF_STATUS_INVALID_UTF8 = 2,
  RF_STATUS_VALIDATION = 3,
  RF_STATUS_PARSE = 4,
  RF_STATUS_IO = 5,
  RF_STATUS_MODEL_FILE = 6,
  RF_STATUS_DIMENSION_MISMATCH = 7,
  RF_STATUS_DIVERGED = 8,
  RF_STATUS_INTERNAL = 9,
  RF_STATUS_PANIC = 10,
} RfStatus;

/**
 * Opaque trained classifier.
 */
typedef struct RfClassifier RfClassifier;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call on this thread.
 */
const char *rf_last_error(void);

/**
 * Library version as a static string.
 */
const char *rf_version(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void rf_string_free(char *s);

/**
 * Canonical normalized form of an entity surface.
 *
 * # Safety
 * `surface` must be a nul-terminated string; `out` a writable pointer.
 */
enum RfStatus rf_normalize_entity(const char *surface, char **out);

/**
 * Pattern-extracted entities of one direction as a JSON array of
 * `{"surface", "normalized", "category"}` objects.
 *
 * # Safety
 * `direction` must be a nul-terminated string; `out_json` a writable
 * pointer.
 */
enum RfStatus rf_extract_entities(const char *direction, char **out_json);

/**
 * Vote entropy in nats of `n` committee votes given as genre ids 1..9.
 *
 * # Safety
 * `genre_ids` must point to `n` readable bytes; `out` must be writable.
 */
enum RfStatus rf_vote_entropy(const uint8_t *genre_ids, size_t n, double *out);

/**
 * Fleiss' kappa over an `items` x 9 row-major table of rating counts.
 * When every rating falls in one genre kappa is undefined: `*degenerate`
 * is set to 1 and `*out` to NaN.
 *
 * # Safety
 * `counts` must point to `items * 9` readable values; `out` and
 * `degenerate` must be writable.
 */
enum RfStatus rf_fleiss_kappa(const uint32_t *counts,
                              size_t items,
                              double *out,
                              int32_t *degenerate);

/**
 * Loads a model file written by `recipeforge train`.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` a writable pointer.
 */
enum RfStatus rf_classifier_load(const char *path, struct RfClassifier **out);

/**
 * # Safety
 * `c` must be null or a classifier from [`rf_classifier_load`], freed once.
 */
void rf_classifier_free(struct RfClassifier *c);

/**
 * Scores one record given as a single canonical JSON line. Writes nine
 * genre probabilities (genre id order) to `probs` and the predicted genre
 * id to `genre_id`.
 *
 * # Safety
 * `c` must be a live classifier; `record_json` a nul-terminated string;
 * `probs` must have room for 9 doubles; `genre_id` must be writable.
 */
enum RfStatus rf_classifier_predict(const struct RfClassifier *c,
                                    const char *record_json,
                                    double *probs,
                                    uint8_t *genre_id);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECIPEFORGE_H */
