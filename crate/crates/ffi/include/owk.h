#ifndef OWK_H
#define OWK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Characteristic-function form of a model.
 */
typedef enum OwkForm {
  /**
   * `Re g(r)`, the form the simple walk follows.
   */
  OWK_FORM_EXCURSION = 0,
  /**
   * `Re[g(r)/r]`.
   */
  OWK_FORM_RECIPROCAL = 1,
} OwkForm;

/**
 * Result of every fallible call.
 */
typedef enum OwkStatus {
  OWK_STATUS_OK = 0,
  OWK_STATUS_NULL_POINTER = 1,
  OWK_STATUS_INVALID_INPUT = 2,
  OWK_STATUS_STRUCTURAL = 3,
  OWK_STATUS_NUMERIC = 4,
  OWK_STATUS_DIAGNOSTIC = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  OWK_STATUS_INTERNAL = 6,
} OwkStatus;

/**
 * Excursion endpoints from `owk_simulate_new`.
 */
typedef struct OwkEpisodes OwkEpisodes;

typedef struct OwkMartinReport OwkMartinReport;

/**
 * A CF model together with its quadrature settings.
 */
typedef struct OwkModel OwkModel;

/**
 * A law on the integers: `len` atoms plus the mass left outside them.
 */
typedef struct OwkTable OwkTable;

/**
 * One simulated excursion.
 */
typedef struct OwkEpisode {
  uint64_t tau1;
  int64_t x_sigma1;
  bool truncated;
} OwkEpisode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *owk_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated and
 * NUL-terminated) and returns the full message length, or 0 if there is none.
 *
 * # Safety
 * `buf` must be NULL or valid for `len` bytes.
 */
size_t owk_last_error_message(char *buf, size_t len);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void owk_string_free(char *s);

/**
 * `Re[g(r)/r]` evaluated from the series and from its closed form.
 *
 * # Safety
 * The out-pointers must be valid.
 */
enum OwkStatus owk_embedded_cf(double t, double p, double *series, double *closed);

/**
 * New model with the default quadrature settings. `abs_tol <= 0` keeps the
 * default absolute tolerance.
 *
 * # Safety
 * `out` must be valid; the handle is released with [`owk_model_free`].
 */
enum OwkStatus owk_model_new(double p, enum OwkForm form, double abs_tol, struct OwkModel **out);

/**
 * # Safety
 * `m` must be NULL or a handle from [`owk_model_new`] not yet freed.
 */
void owk_model_free(struct OwkModel *m);

/**
 * `γ(x)`, the embedded-chain Green function from 0 to x, times π.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_gamma(const struct OwkModel *m, int64_t x, double *out);

/**
 * Expected visits to the axis point `(z, 0)` starting from `(y1, y2)`.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_green_from(const struct OwkModel *m,
                              int64_t y1,
                              int64_t y2,
                              int64_t z,
                              double *out);

/**
 * Expected visits to `(y1, y2)` starting from the axis point `(z, 0)`.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_green_to(const struct OwkModel *m,
                            int64_t z,
                            int64_t y1,
                            int64_t y2,
                            double *out);

/**
 * Martin kernel `K((z, 0), y)` normalized at the origin.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_martin_kernel_axis(const struct OwkModel *m,
                                      int64_t z,
                                      int64_t y1,
                                      int64_t y2,
                                      double *out);

/**
 * `Σ_z ν_x(z) K((z, 0), y)`.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_averaged_axis_kernel(const struct OwkModel *m,
                                        int64_t x1,
                                        int64_t x2,
                                        int64_t y1,
                                        int64_t y2,
                                        double *out);

/**
 * Full Martin kernel `K(x, y)`; the first term is estimated with `n_walks`
 * simulated walks. `error` may be NULL.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_martin_kernel_full(const struct OwkModel *m,
                                      int64_t x1,
                                      int64_t x2,
                                      int64_t y1,
                                      int64_t y2,
                                      uint64_t n_walks,
                                      uint64_t horizon,
                                      uint64_t seed,
                                      double *out,
                                      double *error);

/**
 * Law of the first axis point reached from `(y1, y2)`. With `window > 0` the
 * law is computed on that many sites; otherwise the window grows until the
 * mass outside it is below `tail_tol`.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_hitting_law_new(const struct OwkModel *m,
                                   int64_t y1,
                                   int64_t y2,
                                   double tail_tol,
                                   size_t window,
                                   struct OwkTable **out);

/**
 * Law of the height at which column `y1` is first reached from `(x1, x2)`,
 * for heights `1..=u_max`.
 *
 * # Safety
 * `m` must be a live model handle and `out` valid.
 */
enum OwkStatus owk_column_law_new(const struct OwkModel *m,
                                  int64_t x1,
                                  int64_t x2,
                                  int64_t y1,
                                  int64_t u_max,
                                  struct OwkTable **out);

/**
 * # Safety
 * `t` must be a live table handle or NULL (then 0 is returned).
 */
size_t owk_table_len(const struct OwkTable *t);

/**
 * # Safety
 * `t` must be a live table handle and the out-pointers valid.
 */
enum OwkStatus owk_table_get(const struct OwkTable *t, size_t index, int64_t *site, double *mass);

/**
 * Mass not represented by the table's atoms.
 *
 * # Safety
 * `t` must be a live table handle or NULL (then NaN is returned).
 */
double owk_table_tail_bound(const struct OwkTable *t);

/**
 * # Safety
 * `t` must be NULL or a table handle not yet freed.
 */
void owk_table_free(struct OwkTable *t);

/**
 * Simulates `n_walks` walks on the half-plane lattice from `(y1, y2)` until
 * they reach the axis or `horizon` steps pass.
 *
 * # Safety
 * `out` must be valid.
 */
enum OwkStatus owk_simulate_new(int64_t y1,
                                int64_t y2,
                                uint64_t n_walks,
                                uint64_t horizon,
                                uint64_t seed,
                                struct OwkEpisodes **out);

/**
 * # Safety
 * `e` must be a live handle or NULL (then 0 is returned).
 */
size_t owk_episodes_len(const struct OwkEpisodes *e);

/**
 * # Safety
 * `e` must be a live handle and `out` valid.
 */
enum OwkStatus owk_episodes_get(const struct OwkEpisodes *e, size_t index, struct OwkEpisode *out);

/**
 * # Safety
 * `e` must be NULL or a handle not yet freed.
 */
void owk_episodes_free(struct OwkEpisodes *e);

/**
 * Full-kernel values from `(x1, x2)` along one sweep: `sweep` is
 * `lambda=<real>`, `horizontal` or `vertical=<y1>`, with `points` norms
 * spaced geometrically in `[norm_min, norm_max]`.
 *
 * # Safety
 * `m` must be a live model handle, `sweep` a NUL-terminated string and `out` valid.
 */
enum OwkStatus owk_martin_report_new(const struct OwkModel *m,
                                     int64_t x1,
                                     int64_t x2,
                                     const char *sweep,
                                     double norm_min,
                                     double norm_max,
                                     size_t points,
                                     uint64_t n_walks,
                                     uint64_t horizon,
                                     uint64_t seed,
                                     struct OwkMartinReport **out);

/**
 * Sup over the last quartile of the sweep of `|K - 1|`; NaN when every
 * tail point failed.
 *
 * # Safety
 * `r` must be a live handle or NULL (then NaN is returned).
 */
double owk_martin_report_sup_deviation(const struct OwkMartinReport *r);

/**
 * The report as JSON; release with [`owk_string_free`].
 *
 * # Safety
 * `r` must be a live handle and `out` valid.
 */
enum OwkStatus owk_martin_report_json(const struct OwkMartinReport *r, char **out);

/**
 * # Safety
 * `r` must be NULL or a handle not yet freed.
 */
void owk_martin_report_free(struct OwkMartinReport *r);

/**
 * Runs a verification suite (`cf`, `green`, `embedded`, `full`, `poisson` or
 * `all`) with Monte Carlo budgets scaled by `budget_scale`. Writes the JSON
 * report to `json` (release with [`owk_string_free`]) and whether every check
 * passed to `passed`.
 *
 * # Safety
 * `suite` must be a NUL-terminated string and the out-pointers valid.
 */
enum OwkStatus owk_verify(const char *suite,
                          double budget_scale,
                          uint64_t seed,
                          char **json,
                          bool *passed);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* OWK_H */
