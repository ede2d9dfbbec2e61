#ifndef SIMPLEX_QMC_H
#define SIMPLEX_QMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum SqmcStatus {
  SQMC_STATUS_OK = 0,
  SQMC_STATUS_INVALID_ARGUMENT = 1,
  SQMC_STATUS_DIMENSION_MISMATCH = 2,
  SQMC_STATUS_OUT_OF_RANGE = 3,
  // Smoothness `r <= d + 1`.
  SQMC_STATUS_SMOOTHNESS = 4,
  SQMC_STATUS_INTERNAL = 5,
  SQMC_STATUS_IO = 6,
  SQMC_STATUS_PARSE = 7,
  SQMC_STATUS_NULL_POINTER = 8,
  // A Rust panic was caught at the boundary.
  SQMC_STATUS_PANIC = 9,
} SqmcStatus;

// Orthonormal basis of `Π_L` on the simplex.
typedef struct SqmcBasis SqmcBasis;

// Truncated kernel `K_1 = 1 + γ g`.
typedef struct SqmcKernel SqmcKernel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sqmc_version(void);

// Message of the last failed call on this thread, or null if it
// succeeded. Release with [`sqmc_string_free`].
char *sqmc_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void sqmc_string_free(char *s);

// Builds (or takes from the process cache) the basis of degree `<= max_degree`.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to be
// released with [`sqmc_basis_free`].
enum SqmcStatus sqmc_basis_new(size_t d, size_t max_degree, struct SqmcBasis **out);

// # Safety
// `basis` must be null or a handle from [`sqmc_basis_new`] not yet freed.
void sqmc_basis_free(struct SqmcBasis *basis);

// Number of basis functions, or 0 for a null handle.
//
// # Safety
// `basis` must be null or a live handle.
size_t sqmc_basis_len(const struct SqmcBasis *basis);

// Evaluates every basis function at `x` (`d` coordinates) into `out`,
// which must hold `out_len >= sqmc_basis_len(basis)` doubles.
//
// # Safety
// Pointers must be valid for the stated lengths.
enum SqmcStatus sqmc_basis_eval(const struct SqmcBasis *basis,
                                const double *x,
                                size_t d,
                                double *out,
                                size_t out_len);

// Creates the kernel for `(d, r, γ)`. `max_degree = 0` picks the default
// truncation; otherwise the kernel is truncated at that degree.
//
// # Safety
// `out` must be a valid pointer; on success it receives a handle to be
// released with [`sqmc_kernel_free`].
enum SqmcStatus sqmc_kernel_new(size_t d,
                                double r,
                                double gamma,
                                size_t max_degree,
                                struct SqmcKernel **out);

// # Safety
// `kernel` must be null or a handle from [`sqmc_kernel_new`] not yet freed.
void sqmc_kernel_free(struct SqmcKernel *kernel);

// Truncation degree `L` and certified tail tolerance of the kernel.
//
// # Safety
// Pointers must be valid.
enum SqmcStatus sqmc_kernel_truncation(const struct SqmcKernel *kernel,
                                       size_t *max_degree,
                                       double *tail_tolerance);

// `g(x, y)` for simplex points of `d` coordinates.
//
// # Safety
// `x` and `y` must hold `d` doubles; `out` must be valid.
enum SqmcStatus sqmc_kernel_g(const struct SqmcKernel *kernel,
                              const double *x,
                              const double *y,
                              size_t d,
                              double *out);

// `K_1(x, y) = 1 + γ g(x, y)`.
//
// # Safety
// `x` and `y` must hold `d` doubles; `out` must be valid.
enum SqmcStatus sqmc_kernel_k1(const struct SqmcKernel *kernel,
                               const double *x,
                               const double *y,
                               size_t d,
                               double *out);

// `K_m(x, y)` for product points of `m·d` coordinates with weights
// `gammas[0..m]`.
//
// # Safety
// `x` and `y` must hold `m·d` doubles, `gammas` `m` doubles; `out` must be
// valid.
enum SqmcStatus sqmc_kernel_km(const struct SqmcKernel *kernel,
                               const double *x,
                               const double *y,
                               size_t m,
                               const double *gammas,
                               double *out);

// Squared worst-case error of `n` equal-weight nodes in `[T^d]^m`.
//
// # Safety
// `points` must hold `n·m·d` doubles, `gammas` `m` doubles; `out` must be
// valid.
enum SqmcStatus sqmc_wce_sq(const struct SqmcKernel *kernel,
                            const double *points,
                            size_t n,
                            size_t m,
                            const double *gammas,
                            double *out);

// Series constant `c_{d,r}`.
//
// # Safety
// `out` must be valid.
enum SqmcStatus sqmc_c_dr(size_t d, double r, double *out);

// Series constant `s_{d,r}`.
//
// # Safety
// `out` must be valid.
enum SqmcStatus sqmc_s_dr(size_t d, double r, double *out);

// All kernel constants for weights bounded by `gamma_star`, as a JSON
// document. `grid_divisions = 0` uses the default grid. Release the string
// with [`sqmc_string_free`].
//
// # Safety
// `out` must be valid.
enum SqmcStatus sqmc_kernel_constants_json(const struct SqmcKernel *kernel,
                                           double gamma_star,
                                           size_t grid_divisions,
                                           char **out);

// Squared worst-case error of the point set stored in `path` (`.csv` or
// JSON), with weights `gammas[0..m]` where `m` must match the file.
//
// # Safety
// `path` must be a valid C string, `gammas` must hold `m` doubles and
// `out` must be valid.
enum SqmcStatus sqmc_wce_sq_file(const struct SqmcKernel *kernel,
                                 const char *path,
                                 size_t m,
                                 const double *gammas,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIMPLEX_QMC_H */
