#ifndef DPST_H
#define DPST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DPST_MODE_CORRELATED_LOS 0

#define DPST_MODE_DPST 1

#define DPST_MODE_IDEAL 2

#define DPST_METRIC_EFFECTIVE_SINR_DB 0

#define DPST_METRIC_THROUGHPUT_BPS 1

typedef enum {
  DPST_STATUS_OK = 0,
  DPST_STATUS_NULL_POINTER = 1,
  DPST_STATUS_INVALID_ARGUMENT = 2,
  DPST_STATUS_CONFIG = 3,
  DPST_STATUS_NUMERICAL = 4,
  DPST_STATUS_IO = 5,
  DPST_STATUS_OUT_OF_RANGE = 6,
  DPST_STATUS_PANIC = 7,
} DpstStatus;

/**
 * Finished campaign handle. Keeps the configuration it was run with.
 */
typedef struct DpstCampaign DpstCampaign;

/**
 * Run configuration handle.
 */
typedef struct DpstConfig DpstConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a
 * successful call. Valid until the next call on the same thread.
 */
const char *dpst_last_error(void);

/**
 * Library version, static string.
 */
const char *dpst_version(void);

/**
 * Default configuration.
 *
 * # Safety
 * `out` must be a valid pointer to a `DpstConfig*`.
 */
DpstStatus dpst_config_new(DpstConfig **out);

/**
 * Configuration parsed from flat TOML text; missing keys take defaults.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` a valid `DpstConfig*` slot.
 */
DpstStatus dpst_config_from_toml(const char *text, DpstConfig **out);

/**
 * # Safety
 * `cfg` must come from `dpst_config_new`/`dpst_config_from_toml` and not be
 * used afterwards. Null is ignored.
 */
void dpst_config_free(DpstConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
DpstStatus dpst_config_set_drops(DpstConfig *cfg, size_t drops);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
DpstStatus dpst_config_set_seed(DpstConfig *cfg, uint64_t seed);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
DpstStatus dpst_config_set_tau_fraction(DpstConfig *cfg, double tau_fraction);

/**
 * # Safety
 * `cfg` must be a live config handle.
 */
DpstStatus dpst_config_set_oversampling(DpstConfig *cfg, size_t tx_os, size_t rx_os);

/**
 * Replaces the ISD list with `len` values from `isds`.
 *
 * # Safety
 * `cfg` must be a live config handle; `isds` must point to `len` doubles.
 */
DpstStatus dpst_config_set_isds(DpstConfig *cfg, const double *isds, size_t len);

/**
 * Replaces the mode list with `len` `DPST_MODE_*` codes.
 *
 * # Safety
 * `cfg` must be a live config handle; `modes` must point to `len` values.
 */
DpstStatus dpst_config_set_modes(DpstConfig *cfg, const uint32_t *modes, size_t len);

/**
 * Hex configuration hash, NUL-terminated, copied into `buf`.
 *
 * # Safety
 * `cfg` must be a live config handle; `buf` must hold `cap` bytes.
 */
DpstStatus dpst_config_hash(const DpstConfig *cfg, char *buf, size_t cap);

/**
 * Condition number of the DPST virtual channel for the fully correlated
 * 2×2 channel. Infinite results are reported as `INFINITY`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
DpstStatus dpst_condition_number(double tau_fraction,
                                 size_t tx_os,
                                 size_t rx_os,
                                 size_t block_symbols,
                                 double *out);

/**
 * Runs the campaign described by `cfg`. Uses the global thread pool.
 *
 * # Safety
 * `cfg` must be a live config handle; `out` a valid `DpstCampaign*` slot.
 */
DpstStatus dpst_campaign_run(const DpstConfig *cfg, DpstCampaign **out);

/**
 * # Safety
 * `c` must come from `dpst_campaign_run` and not be used afterwards. Null
 * is ignored.
 */
void dpst_campaign_free(DpstCampaign *c);

/**
 * # Safety
 * `c` must be a live campaign handle; `out` a valid pointer.
 */
DpstStatus dpst_campaign_isd_count(const DpstCampaign *c, size_t *out);

/**
 * ISD in meters at `isd_index`.
 *
 * # Safety
 * `c` must be a live campaign handle; `out` a valid pointer.
 */
DpstStatus dpst_campaign_isd(const DpstCampaign *c, size_t isd_index, double *out);

/**
 * Median of a metric for one ISD and mode.
 *
 * # Safety
 * `c` must be a live campaign handle; `out` a valid pointer.
 */
DpstStatus dpst_campaign_median(const DpstCampaign *c,
                                size_t isd_index,
                                uint32_t mode,
                                uint32_t metric,
                                double *out);

/**
 * Median effective-SINR gain of DPST over the correlated channel, dB.
 *
 * # Safety
 * `c` must be a live campaign handle; `out` a valid pointer.
 */
DpstStatus dpst_campaign_median_gain_db(const DpstCampaign *c, size_t isd_index, double *out);

/**
 * Number of CDF samples for one ISD, mode and metric.
 *
 * # Safety
 * `c` must be a live campaign handle; `out` a valid pointer.
 */
DpstStatus dpst_campaign_cdf_len(const DpstCampaign *c,
                                 size_t isd_index,
                                 uint32_t mode,
                                 uint32_t metric,
                                 size_t *out);

/**
 * Copies the sorted CDF samples into `buf`, which must hold at least
 * `dpst_campaign_cdf_len` values.
 *
 * # Safety
 * `c` must be a live campaign handle; `buf` must hold `cap` doubles.
 */
DpstStatus dpst_campaign_cdf_samples(const DpstCampaign *c,
                                     size_t isd_index,
                                     uint32_t mode,
                                     uint32_t metric,
                                     double *buf,
                                     size_t cap);

/**
 * Writes the CDF CSVs and `summary.json` into `dir`, creating it if needed.
 *
 * # Safety
 * `c` must be a live campaign handle; `dir` a NUL-terminated path.
 */
DpstStatus dpst_campaign_write(const DpstCampaign *c, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPST_H */
