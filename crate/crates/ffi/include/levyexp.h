#ifndef LEVYEXP_H
#define LEVYEXP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Best-response classification codes.
#define LX_BEST_RESPONSE_ZERO 0

#define LX_BEST_RESPONSE_ONE 1

#define LX_BEST_RESPONSE_ALL 2

// Status codes returned by every fallible function.
typedef enum LxStatus {
  LX_STATUS_OK = 0,
  LX_STATUS_NULL_POINTER = 1,
  LX_STATUS_INVALID_ARGUMENT = 2,
  LX_STATUS_NUMERICAL = 3,
  LX_STATUS_IO = 4,
  LX_STATUS_PANIC = 5,
} LxStatus;

// A simulated path ensemble.
typedef struct LxEnsemble LxEnsemble;

// A validated discrete-state model.
typedef struct LxModel LxModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last error on this thread, or null. Valid until the next
// failing call on the same thread.
const char *lx_last_error(void);

// Library version as a static string.
const char *lx_version(void);

// Parses a model from its JSON text.
//
// # Safety
// `json` must be a nul-terminated string and `out` a writable pointer.
enum LxStatus lx_model_from_json(const char *json, struct LxModel **out);

// # Safety
// `model` must come from [`lx_model_from_json`] and not be freed twice.
void lx_model_free(struct LxModel *model);

// Number of non-reference states L (beliefs are passed as π₁, …, π_L).
//
// # Safety
// `model` must be a live handle or null (returns 0).
size_t lx_model_dim(const struct LxModel *model);

// Incentive I(π); writes +∞ when m(π) ≥ s.
//
// # Safety
// `probs` must point to `len` doubles and `out` to one writable double.
enum LxStatus lx_incentive(const struct LxModel *model,
                           const double *probs,
                           size_t len,
                           double *out);

// Symmetric equilibrium action κ†(π).
//
// # Safety
// As [`lx_incentive`].
enum LxStatus lx_equilibrium_action(const struct LxModel *model,
                                    const double *probs,
                                    size_t len,
                                    double *out);

// Best-response set against opponents playing `opponents_action`, as one of
// the `LX_BEST_RESPONSE_*` codes.
//
// # Safety
// As [`lx_incentive`], with `out` pointing to one writable int32.
enum LxStatus lx_best_response(const struct LxModel *model,
                               const double *probs,
                               size_t len,
                               double opponents_action,
                               int32_t *out);

// Simulates `profile` (e.g. "eq", "const:0", "eq/eq/const:1") from the
// model prior.
//
// # Safety
// `model` must be live, `profile` nul-terminated, `out` writable.
enum LxStatus lx_simulate(const struct LxModel *model,
                          const char *profile,
                          double horizon,
                          double dt,
                          size_t paths,
                          uint64_t seed,
                          struct LxEnsemble **out);

// # Safety
// `ensemble` must come from [`lx_simulate`] and not be freed twice.
void lx_ensemble_free(struct LxEnsemble *ensemble);

// Long-run average payoff estimate for `player`: mean shortfall over the
// horizon, its standard error, and the separately reported tail bound.
//
// # Safety
// Handles must be live; the three outputs must be writable.
enum LxStatus lx_ensemble_estimate(const struct LxEnsemble *ensemble,
                                   const struct LxModel *model,
                                   size_t player,
                                   double *estimate,
                                   double *standard_error,
                                   double *tail_bound);

// Runs an experiment spec given as JSON and returns the result document.
// Free the returned string with [`lx_string_free`].
//
// # Safety
// `spec_json` must be nul-terminated and `out` writable.
enum LxStatus lx_run_experiment(const char *spec_json, char **out);

// # Safety
// `s` must come from this library and not be freed twice.
void lx_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVYEXP_H */
