#ifndef GPRTOPO_H
#define GPRTOPO_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GprtopoStatus {
  GPRTOPO_STATUS_OK = 0,
  GPRTOPO_STATUS_NULL_POINTER = 1,
  GPRTOPO_STATUS_INVALID_ARGUMENT = 2,
  GPRTOPO_STATUS_IO = 3,
  GPRTOPO_STATUS_FORMAT = 4,
  GPRTOPO_STATUS_DIMENSION_MISMATCH = 5,
  GPRTOPO_STATUS_GEOMETRY = 6,
  GPRTOPO_STATUS_BUFFER_TOO_SMALL = 7,
  GPRTOPO_STATUS_OUT_OF_RANGE = 8,
  GPRTOPO_STATUS_PANIC = 99,
} GprtopoStatus;

typedef enum GprtopoReduction {
  GPRTOPO_REDUCTION_TWIST = 0,
  GPRTOPO_REDUCTION_STANDARD = 1,
} GprtopoReduction;

typedef enum GprtopoRenderMode {
  GPRTOPO_RENDER_MODE_BOUNDARY = 0,
  GPRTOPO_RENDER_MODE_FILLED = 1,
} GprtopoRenderMode;

/**
 * Opaque persistence diagram.
 */
typedef struct GprtopoDiagram GprtopoDiagram;

/**
 * Opaque grayscale image.
 */
typedef struct GprtopoImage GprtopoImage;

/**
 * Options for [`gprtopo_diagram_compute`]. A null pointer means defaults.
 */
typedef struct GprtopoPersistenceOptions {
  bool invert;
  /**
   * Quantization levels; 0 keeps the input values.
   */
  uint32_t quantize;
  enum GprtopoReduction reduction;
  /**
   * Keep pairs with birth == death.
   */
  bool keep_zero_persistence;
} GprtopoPersistenceOptions;

/**
 * One persistence pair. `death` and `lifetime` are +inf for essential classes.
 */
typedef struct GprtopoPair {
  uint8_t dim;
  double birth;
  double death;
  double lifetime;
  size_t n_cycle_edges;
} GprtopoPair;

/**
 * Axis-aligned box as corners.
 */
typedef struct GprtopoRect {
  double x1;
  double y1;
  double x2;
  double y2;
} GprtopoRect;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *gprtopo_version(void);

/**
 * Copy of the last error message on this thread, or null if the last call
 * succeeded. Release it with [`gprtopo_string_free`].
 */
char *gprtopo_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library (or be null) and not be freed twice.
 */
void gprtopo_string_free(char *s);

/**
 * Builds an image from `width * height` row-major values in `[0, 1]`.
 *
 * # Safety
 * `pixels` must point to `width * height` doubles; `out` must be writable.
 */
enum GprtopoStatus gprtopo_image_new(size_t width,
                                     size_t height,
                                     const double *pixels,
                                     struct GprtopoImage **out);

/**
 * Reads a PGM or grayscale PNG. Color PNGs fail unless `luma` is set.
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum GprtopoStatus gprtopo_image_load(const char *path, bool luma, struct GprtopoImage **out);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
size_t gprtopo_image_width(const struct GprtopoImage *img);

/**
 * # Safety
 * `img` must be a live handle or null.
 */
size_t gprtopo_image_height(const struct GprtopoImage *img);

/**
 * # Safety
 * `img` must come from this library (or be null) and not be freed twice.
 */
void gprtopo_image_free(struct GprtopoImage *img);

/**
 * Sublevel persistence of `img`; `opts` may be null.
 *
 * # Safety
 * `img` must be a live handle, `opts` null or valid, `out` writable.
 */
enum GprtopoStatus gprtopo_diagram_compute(const struct GprtopoImage *img,
                                           const struct GprtopoPersistenceOptions *opts,
                                           struct GprtopoDiagram **out);

/**
 * Number of pairs, 0 for a null handle.
 *
 * # Safety
 * `d` must be a live handle or null.
 */
size_t gprtopo_diagram_len(const struct GprtopoDiagram *d);

/**
 * # Safety
 * `d` must be a live handle; `out` writable.
 */
enum GprtopoStatus gprtopo_diagram_get(const struct GprtopoDiagram *d,
                                       size_t index,
                                       struct GprtopoPair *out);

/**
 * Copies the representative cycle's edge ids of pair `index` into `edges`.
 * `len` receives the cycle length even when `cap` is too small.
 *
 * # Safety
 * `edges` must hold `cap` values (may be null when `cap` is 0); `len` writable.
 */
enum GprtopoStatus gprtopo_diagram_cycle(const struct GprtopoDiagram *d,
                                         size_t index,
                                         uint32_t *edges,
                                         size_t cap,
                                         size_t *len);

/**
 * Classes of dimension `dim` alive at `eps`.
 *
 * # Safety
 * `d` must be a live handle or null.
 */
size_t gprtopo_diagram_betti(const struct GprtopoDiagram *d, uint8_t dim, double eps);

/**
 * # Safety
 * `d` must come from this library (or be null) and not be freed twice.
 */
void gprtopo_diagram_free(struct GprtopoDiagram *d);

/**
 * Writes the lifetime-weighted shape map (row-major, width * height values).
 *
 * # Safety
 * `d` must be a live handle; `out` must hold `out_len` doubles.
 */
enum GprtopoStatus gprtopo_render_shape_map(const struct GprtopoDiagram *d,
                                            enum GprtopoRenderMode mode,
                                            double min_lifetime,
                                            double *out,
                                            size_t out_len);

/**
 * Writes the blend plane `alpha * raw + (1 - alpha) * shape_map` for a
 * diagram computed from `img`.
 *
 * # Safety
 * Handles must be live; `out` must hold `out_len` doubles.
 */
enum GprtopoStatus gprtopo_fuse(const struct GprtopoImage *img,
                                const struct GprtopoDiagram *d,
                                enum GprtopoRenderMode mode,
                                double min_lifetime,
                                double alpha,
                                double *out,
                                size_t out_len);

/**
 * Intersection over union of two boxes; 0 when disjoint.
 */
double gprtopo_iou(struct GprtopoRect a, struct GprtopoRect b);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPRTOPO_H */
