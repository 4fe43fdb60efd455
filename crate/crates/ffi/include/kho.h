#ifndef KHO_H
#define KHO_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum KhoStatus {
  KHO_STATUS_OK = 0,
  KHO_STATUS_NULL_POINTER = 1,
  KHO_STATUS_INVALID_ARGUMENT = 2,
  KHO_STATUS_GRID_MISMATCH = 3,
  KHO_STATUS_IO = 4,
  KHO_STATUS_NUMERICAL = 5,
  KHO_STATUS_PANIC = 6,
} KhoStatus;

/**
 * Which evolution a field follows.
 */
typedef enum KhoFieldKind {
  KHO_FIELD_KIND_QUANTUM = 0,
  KHO_FIELD_KIND_CLASSICAL = 1,
} KhoFieldKind;

/**
 * Opaque field on a grid.
 */
typedef struct KhoField KhoField;

/**
 * Opaque phase-space grid.
 */
typedef struct KhoGrid KhoGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t kho_last_error(char *buf, size_t len);

/**
 * Square grid on `[-extent, extent]^2` with `n_cells` per axis, spacing
 * adjusted so that it is compatible with `eta`.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum KhoStatus kho_grid_new(double extent, size_t n_cells, double eta, struct KhoGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from `kho_grid_new` not yet freed.
 */
void kho_grid_free(struct KhoGrid *grid);

/**
 * Node counts and spacings of a grid. Any output pointer may be null.
 *
 * # Safety
 * `grid` must be a live handle; non-null outputs must be writable.
 */
enum KhoStatus kho_grid_shape(const struct KhoGrid *grid,
                              size_t *nq,
                              size_t *np,
                              double *dq,
                              double *dp);

/**
 * Coherent-state Gaussian of width `eta` centred at `(q0, p0)`.
 *
 * # Safety
 * `grid` must be a live handle and `out` writable.
 */
enum KhoStatus kho_field_coherent(const struct KhoGrid *grid,
                                  double q0,
                                  double p0,
                                  double eta,
                                  enum KhoFieldKind kind,
                                  struct KhoField **out);

/**
 * Field from `len` values laid out with `q` as the outer index.
 *
 * # Safety
 * `grid` must be a live handle, `values` must point to `len` doubles and
 * `out` must be writable.
 */
enum KhoStatus kho_field_from_values(const struct KhoGrid *grid,
                                     const double *values,
                                     size_t len,
                                     enum KhoFieldKind kind,
                                     struct KhoField **out);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
void kho_field_free(struct KhoField *field);

/**
 * Number of values in a field, 0 for a null handle.
 *
 * # Safety
 * `field` must be null or a live field handle.
 */
size_t kho_field_len(const struct KhoField *field);

/**
 * Copies the values out; `len` must equal [`kho_field_len`].
 *
 * # Safety
 * `field` must be live and `buf` must point to `len` writable doubles.
 */
enum KhoStatus kho_field_values(const struct KhoField *field, double *buf, size_t len);

/**
 * Riemann integral of the field.
 *
 * # Safety
 * `field` must be live and `out` writable.
 */
enum KhoStatus kho_field_mass(const struct KhoField *field, double *out);

/**
 * Advances a field by one kick period in place: quantum fields follow the
 * Wigner evolution, classical ones the Liouville evolution, both with
 * diffusion `d` per period.
 *
 * # Safety
 * `field` must be a live handle not used concurrently.
 */
enum KhoStatus kho_field_step(struct KhoField *field,
                              double k,
                              double eta,
                              double nu_tau,
                              double d);

/**
 * Diffuses a field in place with variance `2d` per axis.
 *
 * # Safety
 * `field` must be a live handle not used concurrently.
 */
enum KhoStatus kho_field_diffuse(struct KhoField *field, double d);

/**
 * L1 distance between two fields on the same grid.
 *
 * # Safety
 * Both fields must be live and `out` writable.
 */
enum KhoStatus kho_dn(const struct KhoField *a, const struct KhoField *b, double *out);

/**
 * Semiclassical parameter `K eta^4 / D^{3/2}`.
 *
 * # Safety
 * `out` must be writable.
 */
enum KhoStatus kho_chi(double k, double eta, double d, double *out);

/**
 * 1 if the origin is an elliptic fixed point of the classical map, 0 if
 * it is hyperbolic or parabolic.
 */
int32_t kho_origin_is_elliptic(double k, double nu_tau);

/**
 * Writes a binary snapshot of the field.
 *
 * # Safety
 * `field` must be live and `path` a NUL-terminated string.
 */
enum KhoStatus kho_field_save(const struct KhoField *field, const char *path);

/**
 * Reads a binary snapshot into a new field and, optionally, its grid.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `out` writable, and `out_grid`
 * null or writable.
 */
enum KhoStatus kho_field_load(const char *path,
                              enum KhoFieldKind kind,
                              struct KhoField **out,
                              struct KhoGrid **out_grid);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KHO_H */
