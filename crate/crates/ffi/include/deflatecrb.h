#ifndef DEFLATECRB_H
#define DEFLATECRB_H

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum DcrbStatus {
  DCRB_STATUS_OK = 0,
  DCRB_STATUS_NULL_POINTER = 1,
  DCRB_STATUS_INVALID_ARGUMENT = 2,
  DCRB_STATUS_INVALID_DIMS = 3,
  DCRB_STATUS_DIMENSION_MISMATCH = 4,
  DCRB_STATUS_RANK_DEFICIENT = 5,
  DCRB_STATUS_ILL_CONDITIONED = 6,
  DCRB_STATUS_NON_FINITE = 7,
  DCRB_STATUS_REGIME = 8,
  DCRB_STATUS_INSIDE_SUPPORT = 9,
  DCRB_STATUS_TOO_MANY_FAILURES = 10,
  DCRB_STATUS_CONFIG = 11,
  DCRB_STATUS_IO = 12,
  DCRB_STATUS_SERIALIZE = 13,
  DCRB_STATUS_OUT_OF_RANGE = 14,
  DCRB_STATUS_PANIC = 15,
} DcrbStatus;

// Opaque experiment result handle.
typedef struct DcrbResult DcrbResult;

// Opaque scenario handle.
typedef struct DcrbScenario DcrbScenario;

typedef struct DcrbBoundReport {
  double c_deflated;
  double c_joint;
  double c_ideal;
  double c_deflated_inf;
  double c_joint_inf;
  double c_ideal_inf;
  double snr_na_deflated;
  double snr_na_joint;
  double snr_na_ideal;
  double sigma2;
  double sigma0_2;
  double sigma1_2;
  double rho;
  double c;
} DcrbBoundReport;

typedef struct DcrbMpSupport {
  double lambda_minus;
  double lambda_plus;
  double zero_mass;
} DcrbMpSupport;

typedef struct DcrbLemma1 {
  double inverse_trace_mean;
  double inverse_trace_stderr;
  double inverse_trace_limit;
  double trace_mean;
  double trace_stderr;
  double trace_limit;
} DcrbLemma1;

typedef struct DcrbRow {
  uint32_t figure_id;
  size_t n;
  size_t k;
  size_t l_a;
  size_t l_b;
  double snr_db;
  // Estimator code: 0 omp, 1 cosamp, 2 bpdn, 3 oracle_ls, -1 bound summary.
  int32_t estimator;
  bool deflated;
  double mse;
  double mse_db;
  double c_deflated;
  double c_deflated_inf;
  double c_joint;
  double c_joint_inf;
  double c_ideal;
  double c_ideal_inf;
  size_t trials_ok;
  double stderr;
} DcrbRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or NULL. The pointer
// stays valid until the next call into the library from the same thread.
const char *dcrb_last_error(void);

// Library version as a static NUL-terminated string.
const char *dcrb_version(void);

// Deflated bound for `A` (`n x l_a`) and `B` (`n x l_b`).
enum DcrbStatus dcrb_ecrb_deflated(const double *a,
                                   const double *b,
                                   size_t n,
                                   size_t l_a,
                                   size_t l_b,
                                   double sigma2,
                                   double *out);

enum DcrbStatus dcrb_ecrb_joint(const double *a,
                                const double *b,
                                size_t n,
                                size_t l_a,
                                size_t l_b,
                                double sigma0_2,
                                double *out);

enum DcrbStatus dcrb_ecrb_ideal(const double *a,
                                size_t n,
                                size_t l_a,
                                double sigma1_2,
                                double *out);

// All bounds for one dictionary draw, each model calibrated to `snr_db`.
enum DcrbStatus dcrb_bound_report(const double *a,
                                  const double *b,
                                  size_t n,
                                  size_t l_a,
                                  size_t l_b,
                                  double snr_db,
                                  double sigma_alpha2,
                                  double sigma_beta2,
                                  struct DcrbBoundReport *out);

enum DcrbStatus dcrb_mp_support(double rho_tilde, struct DcrbMpSupport *out);

enum DcrbStatus dcrb_mp_density(double rho_tilde, double x, double *out);

enum DcrbStatus dcrb_mp_cdf(double rho_tilde, double x, double *out);

enum DcrbStatus dcrb_mp_moment(double rho_tilde, uint32_t k, double *out);

// Stieltjes transform at `re + i im`.
enum DcrbStatus dcrb_mp_stieltjes(double rho_tilde,
                                  double re,
                                  double im,
                                  double *out_re,
                                  double *out_im);

// Monte-Carlo check of the trace limits. `iid != 0` draws `F` directly.
enum DcrbStatus dcrb_lemma1(size_t n,
                            size_t k,
                            size_t l_a,
                            size_t l_b,
                            size_t trials,
                            uint64_t seed,
                            int32_t iid,
                            struct DcrbLemma1 *out);

// Parses a TOML scenario (same format as the command-line tool).
enum DcrbStatus dcrb_scenario_from_toml(const char *text, struct DcrbScenario **out);

// Scenario of a reference figure (2 to 5). Zero `trials` keeps the default count.
enum DcrbStatus dcrb_scenario_figure(uint32_t id,
                                     uint64_t seed,
                                     size_t trials,
                                     struct DcrbScenario **out);

// Restricts a scenario to the SNR values in `snr_db[0..count]`, keeping its dimensions.
enum DcrbStatus dcrb_scenario_set_snr_grid(struct DcrbScenario *scenario,
                                           const double *snr_db,
                                           size_t count);

void dcrb_scenario_free(struct DcrbScenario *scenario);

// Runs a scenario on `workers` threads (0 for all processors).
enum DcrbStatus dcrb_experiment_run(const struct DcrbScenario *scenario,
                                    size_t workers,
                                    struct DcrbResult **out);

// Number of rows in a result; 0 for a NULL handle.
size_t dcrb_result_row_count(const struct DcrbResult *result);

enum DcrbStatus dcrb_result_row(const struct DcrbResult *result, size_t index, struct DcrbRow *out);

// Row label (estimator or bound name), owned by the result handle; NULL if out of range.
const char *dcrb_result_row_label(const struct DcrbResult *result, size_t index);

// Writes the result to `path`; `format` is "csv" or "json".
enum DcrbStatus dcrb_result_write(const struct DcrbResult *result,
                                  const char *path,
                                  const char *format);

void dcrb_result_free(struct DcrbResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEFLATECRB_H */
