/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef FOGCAST_H
#define FOGCAST_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every fallible call.
typedef enum FogStatus {
  FOG_STATUS_OK = 0,
  FOG_STATUS_NULL_POINTER = 1,
  FOG_STATUS_INVALID_ARGUMENT = 2,
  FOG_STATUS_IO = 3,
  FOG_STATUS_CORRUPT_FILE = 4,
  FOG_STATUS_VERSION_MISMATCH = 5,
  FOG_STATUS_SCHEMA_MISMATCH = 6,
  FOG_STATUS_MISSING_VALUE = 7,
  // Metric undefined for the input, e.g. ROC AUC with one class.
  FOG_STATUS_UNDEFINED = 8,
  // A panic was caught at the boundary.
  FOG_STATUS_INTERNAL = 9,
} FogStatus;

// Opaque trained ensemble.
typedef struct FogModel FogModel;

// Opaque standardization statistics.
typedef struct FogScaler FogScaler;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread; empty if none. The pointer
// stays valid until the next failing call on the same thread.
const char *fog_last_error_message(void);

// Library version as a static string.
const char *fog_version(void);

// Number of model input features (19).
size_t fog_num_features(void);

// Static name of feature `index`, or NULL when out of range.
const char *fog_feature_name(size_t index);

// Loads a model file written by the trainer.
//
// # Safety
//
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum FogStatus fog_model_load(const char *path, struct FogModel **out);

// Loads a model from an in-memory copy of its file.
//
// # Safety
//
// `bytes` must point to `len` readable bytes and `out` be a valid pointer.
enum FogStatus fog_model_from_json(const uint8_t *bytes, size_t len, struct FogModel **out);

// Releases a model. NULL is ignored.
//
// # Safety
//
// `model` must come from a load function and not be used afterwards.
void fog_model_free(struct FogModel *model);

// Number of trees in the ensemble, 0 for NULL.
//
// # Safety
//
// `model` must be NULL or a live handle.
size_t fog_model_num_trees(const struct FogModel *model);

// Fog probability for one scaled feature vector.
//
// # Safety
//
// `model` must be a live handle, `x` point to `n_features` doubles and
// `out` to one writable double.
enum FogStatus fog_model_predict_proba(const struct FogModel *model,
                                       const double *x,
                                       size_t n_features,
                                       double *out);

// Log-odds margin for one scaled feature vector.
//
// # Safety
//
// As [`fog_model_predict_proba`].
enum FogStatus fog_model_predict_margin(const struct FogModel *model,
                                        const double *x,
                                        size_t n_features,
                                        double *out);

// SHAP values of `n_rows` scaled rows (row-major, 19 columns) in margin
// space. Writes 19 values per row to `out_values`, and optionally the
// shared base value to `out_base` and per-row margins to `out_margins`.
//
// # Safety
//
// `x` must hold `n_rows * 19` doubles and `out_values` as many writable
// doubles; `out_margins`, if not NULL, `n_rows` doubles.
enum FogStatus fog_model_shap(const struct FogModel *model,
                              const double *x,
                              size_t n_rows,
                              double *out_values,
                              double *out_base,
                              double *out_margins);

// Loads scaler statistics saved by the trainer.
//
// # Safety
//
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum FogStatus fog_scaler_load(const char *path, struct FogScaler **out);

// Releases a scaler. NULL is ignored.
//
// # Safety
//
// `scaler` must come from [`fog_scaler_load`] and not be used afterwards.
void fog_scaler_free(struct FogScaler *scaler);

// Standardizes one raw feature vector into `out` (19 doubles; may alias
// `x`).
//
// # Safety
//
// `x` must point to `n_features` doubles and `out` to 19 writable doubles.
enum FogStatus fog_scaler_transform(const struct FogScaler *scaler,
                                    const double *x,
                                    size_t n_features,
                                    double *out);

// Solar elevation in degrees at a site and Unix time (seconds, UTC).
//
// # Safety
//
// `out` must point to one writable double.
enum FogStatus fog_solar_elevation(double lat_deg,
                                   double lon_deg,
                                   int64_t unix_seconds,
                                   double *out);

// ROC AUC of `n` scores against 0/1 labels, ties counted as half.
//
// # Safety
//
// `scores` and `labels` must point to `n` elements, `out` to one double.
enum FogStatus fog_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FOGCAST_H */
