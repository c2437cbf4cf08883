#ifndef CONEWAVE_H
#define CONEWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Status code returned by every fallible function.
 */
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_UTF8 = 2,
  CW_STATUS_INVALID_SCENE = 3,
  CW_STATUS_REMOVABLE_CONE_POINT = 4,
  CW_STATUS_INTERIOR_POINT = 5,
  CW_STATUS_CONSTRAINT = 6,
  CW_STATUS_UNSUPPORTED = 7,
  CW_STATUS_CFL = 8,
  CW_STATUS_INVALID_ARGUMENT = 9,
  CW_STATUS_OUT_OF_RANGE = 10,
  CW_STATUS_IO = 11,
  CW_STATUS_JSON = 12,
  CW_STATUS_PANIC = 13,
} CwStatus;

typedef enum CwVerdict {
  CW_VERDICT_PASS = 0,
  CW_VERDICT_FAIL = 1,
  CW_VERDICT_INDETERMINATE = 2,
} CwVerdict;

/*
 Opaque polygon scene.
 */
typedef struct CwScene CwScene;

/*
 Opaque cone surface.
 */
typedef struct CwSurface CwSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or NULL. The pointer stays
 valid until the next call into this library from the same thread.
 */
const char *cw_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *cw_version(void);

/*
 Parses and validates a scene from JSON text.

 # Safety
 `json` must be NUL-terminated; `out` must be writable.
 */
enum CwStatus cw_scene_from_json(const char *json, struct CwScene **out);

/*
 # Safety
 `scene` must come from `cw_scene_from_json` and not be freed twice.
 */
void cw_scene_free(struct CwScene *scene);

/*
 Doubled exterior of a polygon scene (a branched cover for slit scenes).

 # Safety
 `scene` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_surface_double(const struct CwScene *scene, struct CwSurface **out);

/*
 Loads a surface previously serialized by the library.

 # Safety
 `json` must be NUL-terminated; `out` must be writable.
 */
enum CwStatus cw_surface_from_json(const char *json, struct CwSurface **out);

/*
 Serializes a surface; release the string with `cw_string_free`.

 # Safety
 `surface` must be a live handle; `out` must be writable.
 */
enum CwStatus cw_surface_to_json(const struct CwSurface *surface, char **out);

/*
 # Safety
 `s` must come from this library and not be freed twice.
 */
void cw_string_free(char *s);

/*
 # Safety
 `surface` must come from this library and not be freed twice.
 */
void cw_surface_free(struct CwSurface *surface);

/*
 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_surface_cone_count(const struct CwSurface *surface, uintptr_t *out);

/*
 Total angle of cone point `index`.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_surface_cone_angle(const struct CwSurface *surface, uintptr_t index, double *out);

/*
 Plane position of cone point `index`.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_surface_cone_position(const struct CwSurface *surface,
                                       uintptr_t index,
                                       double *x,
                                       double *y);

/*
 Smallest distance between two cone points (+inf with fewer than two).

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_surface_min_cone_distance(const struct CwSurface *surface, double *out);

/*
 Geodesic distance between `(sheet_a, xa, ya)` and `(sheet_b, xb, yb)`.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_surface_distance(const struct CwSurface *surface,
                                  uintptr_t sheet_a,
                                  double xa,
                                  double ya,
                                  uintptr_t sheet_b,
                                  double xb,
                                  double yb,
                                  double *out);

/*
 Sampled non-trapping check. `t0` receives the escape-time certificate on
 a pass and NaN otherwise.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_check_nontrapping(const struct CwSurface *surface,
                                   uintptr_t samples,
                                   double horizon,
                                   uint64_t seed,
                                   enum CwVerdict *verdict_out,
                                   double *t0);

/*
 Collinear-triple check over cone-to-cone geodesics up to `max_length`.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_check_collinear(const struct CwSurface *surface,
                                 double max_length,
                                 uintptr_t fan,
                                 enum CwVerdict *verdict_out,
                                 uintptr_t *witnesses);

/*
 Flat conjugacy check; `certificates` receives the number of geodesics examined.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_check_conjugacy(const struct CwSurface *surface,
                                 double t_max,
                                 uintptr_t fan,
                                 enum CwVerdict *verdict_out,
                                 uintptr_t *certificates);

/*
 Smoothing schedule for target order `s_num / s_den` in dimension `n`.

 # Safety
 Pointers must be valid.
 */
enum CwStatus cw_huygens_schedule(int64_t s_num,
                                  int64_t s_den,
                                  uint32_t n,
                                  double t0,
                                  uint64_t *k,
                                  double *t_s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONEWAVE_H */
