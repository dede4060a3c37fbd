#ifndef WPCN_H
#define WPCN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum WpcnStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  WPCN_STATUS_OK = 0,
  WPCN_STATUS_NULL_POINTER = 1,
  /**
   * A parameter, channel or document was rejected.
   */
  WPCN_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A root finder failed or the instance is degenerate.
   */
  WPCN_STATUS_SOLVER_FAILURE = 3,
  /**
   * The caller's buffer is shorter than the required length.
   */
  WPCN_STATUS_BUFFER_TOO_SMALL = 4,
  WPCN_STATUS_PANIC = 5,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum WpcnStatus WpcnStatus;
#else
typedef int32_t WpcnStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

enum WpcnScheme
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : uint32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  WPCN_SCHEME_TDMA_OPT = 0,
  WPCN_SCHEME_NOMA_OPT = 1,
  /**
   * Half the horizon for energy transfer.
   */
  WPCN_SCHEME_TDMA_FIXED = 2,
  WPCN_SCHEME_NOMA_FIXED = 3,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum WpcnScheme WpcnScheme;
#else
typedef uint32_t WpcnScheme;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque problem instance.
 */
typedef struct WpcnInstance WpcnInstance;

/**
 * Opaque solution of one scheme.
 */
typedef struct WpcnSolution WpcnSolution;

/**
 * Mirror of the system parameters; fill with [`wpcn_default_params`].
 */
typedef struct WpcnSystemParams {
  double pb_power_watts;
  double horizon_seconds;
  double noise_watts;
  size_t num_devices;
  double pathloss_exponent;
  double bandwidth_hz;
  double pb_ap_distance_m;
  double cell_radius_m;
  double reference_distance_m;
} WpcnSystemParams;

/**
 * Scheme-independent summary of a solution.
 */
typedef struct WpcnSummary {
  /**
   * A [`WpcnScheme`] value.
   */
  uint32_t scheme;
  size_t num_devices;
  double objective_bits_per_hz;
  double throughput_bits_per_second;
  double energy_joules;
  double tau0_seconds;
  double ul_time_seconds;
  uint32_t iterations_outer;
  uint64_t iterations_inner;
  double max_kkt_residual;
  bool budget_active;
  /**
   * Device whose harvest limits the NOMA uplink, or -1.
   */
  int64_t bottleneck_device;
} WpcnSummary;

typedef struct WpcnTheoremReport {
  double tau0_tdma;
  double tau0_noma;
  double e_tdma;
  double e_noma;
  double r_tdma;
  double r_noma;
  double r_constructed;
  /**
   * NOMA transfer time and energy are at least TDMA's.
   */
  bool transfer_pass;
  /**
   * TDMA throughput is at least NOMA's.
   */
  bool throughput_pass;
  bool throughput_strict;
} WpcnTheoremReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * Valid until the next `wpcn_` call on the same thread.
 */
const char *wpcn_last_error_message(void);

const char *wpcn_version(void);

double wpcn_dbm_to_watts(double level_dbm);

/**
 * Writes the default scenario parameters to `out`.
 *
 * # Safety
 * `out` must be null or point to writable memory for one struct.
 */
WpcnStatus wpcn_default_params(struct WpcnSystemParams *out);

/**
 * Builds an instance from a JSON document in the CLI's `solve` format.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or
 * writable.
 */
WpcnStatus wpcn_instance_from_json(const char *json, struct WpcnInstance **out);

/**
 * Builds an instance from per-device arrays of length `num_devices`.
 * `params.num_devices` is ignored.
 *
 * # Safety
 * Each array must hold `num_devices` readable values; `out` must be null
 * or writable.
 */
WpcnStatus wpcn_instance_from_arrays(const struct WpcnSystemParams *params,
                                     size_t num_devices,
                                     const double *eta,
                                     const double *circuit_power_watts,
                                     const double *dl_gain,
                                     const double *ul_gain,
                                     struct WpcnInstance **out);

/**
 * Draws `params.num_devices` devices with the given efficiency and circuit power.
 *
 * # Safety
 * `params` must be null or readable; `out` must be null or writable.
 */
WpcnStatus wpcn_instance_sample(const struct WpcnSystemParams *params,
                                double eta,
                                double circuit_power_watts,
                                uint64_t seed,
                                struct WpcnInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library, not yet freed.
 */
void wpcn_instance_free(struct WpcnInstance *inst);

/**
 * Number of devices, or 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t wpcn_instance_num_devices(const struct WpcnInstance *inst);

/**
 * Normalized uplink gains in the solver's (ascending) device order.
 *
 * # Safety
 * `inst` must be null or a live handle; `buf` must hold `len` values.
 */
WpcnStatus wpcn_instance_gammas(const struct WpcnInstance *inst, double *buf, size_t len);

/**
 * Solves `inst` under `scheme` (a [`WpcnScheme`] value).
 *
 * # Safety
 * `inst` must be null or a live handle; `out` must be null or writable.
 */
WpcnStatus wpcn_solve(const struct WpcnInstance *inst,
                      uint32_t scheme,
                      double tol,
                      struct WpcnSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from this library, not yet freed.
 */
void wpcn_solution_free(struct WpcnSolution *sol);

/**
 * # Safety
 * `sol` must be null or a live handle; `out` must be null or writable.
 */
WpcnStatus wpcn_solution_summary(const struct WpcnSolution *sol, struct WpcnSummary *out);

/**
 * Transmit powers in watts, one per device in solver order.
 *
 * # Safety
 * `sol` must be null or a live handle; `buf` must hold `len` values.
 */
WpcnStatus wpcn_solution_powers(const struct WpcnSolution *sol, double *buf, size_t len);

/**
 * Length of the time vector: `K + 1` for TDMA, 2 for NOMA, 0 for null.
 *
 * # Safety
 * `sol` must be null or a live handle.
 */
size_t wpcn_solution_num_times(const struct WpcnSolution *sol);

/**
 * Time allocation in seconds: `[τ0, τ_1, …, τ_K]` for TDMA schemes and
 * `[τ0, τ̄1]` for NOMA schemes.
 *
 * # Safety
 * `sol` must be null or a live handle; `buf` must hold `len` values.
 */
WpcnStatus wpcn_solution_times(const struct WpcnSolution *sol, double *buf, size_t len);

/**
 * Compares both optimal schemes on `inst`; `tol` is relative.
 *
 * # Safety
 * `inst` must be null or a live handle; `out` must be null or writable.
 */
WpcnStatus wpcn_check_theorems(const struct WpcnInstance *inst,
                               double tol,
                               struct WpcnTheoremReport *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WPCN_H */
