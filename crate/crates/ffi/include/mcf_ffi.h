#ifndef MCF_FFI_H
#define MCF_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum McfStatus {
  MCF_STATUS_OK = 0,
  MCF_STATUS_NULL_POINTER = 1,
  // Malformed input: bad dimension, non-finite entry, bad JSON, bad UTF-8.
  MCF_STATUS_INVALID_ARGUMENT = 2,
  // Input is well formed but violates a physical or mathematical condition.
  MCF_STATUS_VALIDATION = 3,
  MCF_STATUS_IO = 4,
  MCF_STATUS_PANIC = 5,
} McfStatus;

// Opaque fibre channel.
typedef struct McfChannelHandle McfChannelHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into this library on the same thread.
const char *mcf_last_error_message(void);

// Fibre with crosstalk `p` (`d*d`) and dephasing `alpha` (`d*d`, real and
// imaginary parts; `alpha_im` may be null). Default tolerances.
//
// # Safety
// Non-null pointers must reference arrays of `d*d` doubles; `out` must be
// writable.
enum McfStatus mcf_channel_new(size_t d,
                               const double *p,
                               const double *alpha_re,
                               const double *alpha_im,
                               struct McfChannelHandle **out);

// Fibre with a single real dephasing coefficient on every pair of cores.
//
// # Safety
// `p` must reference `d*d` doubles; `out` must be writable.
enum McfStatus mcf_channel_uniform(size_t d,
                                   const double *p,
                                   double alpha,
                                   struct McfChannelHandle **out);

// Fibre from a JSON channel config `{"d", "P", "alpha"}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum McfStatus mcf_channel_from_json(const char *json, struct McfChannelHandle **out);

// Fibre whose Choi operator is the partial transpose of the DS state with
// symmetric matrix `m` (`d*d`).
//
// # Safety
// `m` must reference `d*d` doubles; `out` must be writable.
enum McfStatus mcf_channel_from_ds(size_t d, const double *m, struct McfChannelHandle **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void mcf_channel_free(struct McfChannelHandle *h);

// Number of cores, or 0 for a null handle.
//
// # Safety
// `h` must be null or a live handle.
size_t mcf_channel_dim(const struct McfChannelHandle *h);

// Trace preservation, complete positivity and the smallest eigenvalue of
// the Choi block.
//
// # Safety
// `h` must be a live handle; out-pointers must be writable.
enum McfStatus mcf_channel_verify(const struct McfChannelHandle *h,
                                  bool *tp_ok,
                                  bool *cp_ok,
                                  double *choi_min_eig);

// Propagates the density matrix `rho` (`d*d`; `rho_im` may be null).
// Non-trace-preserving channels are refused unless `force` is set.
//
// # Safety
// Input arrays hold `d*d` doubles; output arrays must have room for `d*d`.
enum McfStatus mcf_channel_apply(const struct McfChannelHandle *h,
                                 const double *rho_re,
                                 const double *rho_im,
                                 bool force,
                                 double *out_re,
                                 double *out_im);

// Choi operator, `d²×d²` row-major.
//
// # Safety
// Output arrays must have room for `d⁴` doubles.
enum McfStatus mcf_channel_choi(const struct McfChannelHandle *h, double *out_re, double *out_im);

// Runs the certification protocol and returns the report as JSON. Zero
// `restarts` or `max_iters` select the defaults. Free the string with
// [`mcf_string_free`].
//
// # Safety
// `h` must be a live handle; `out` must be writable.
enum McfStatus mcf_channel_certify_json(const struct McfChannelHandle *h,
                                        bool force,
                                        size_t restarts,
                                        size_t max_iters,
                                        uint64_t seed,
                                        char **out);

// Frees a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void mcf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MCF_FFI_H */
