#ifndef HESSGAME_H
#define HESSGAME_H
/* C interface to the Hessian-game toolkit: experiment configuration,
 * pipeline execution, operator evaluation, and Dirichlet solves behind
 * opaque handles. All functions return a status code; the most recent
 * error message for the calling thread is available via hg_last_error().
 */

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hg_status {
  HG_OK = 0,
  HG_ERR_CONFIG = 1,    /* unparsable or invalid configuration */
  HG_ERR_DIMENSION = 2, /* dimension or rank mismatch */
  HG_ERR_DOMAIN = 3,    /* point outside the domain, grid, or region */
  HG_ERR_NUMERIC = 4,   /* non-finite values, PSD or monotonicity failure */
  HG_ERR_IO = 5,        /* file system trouble */
  HG_ERR_INVALID = 6,   /* null handle or bad argument */
  HG_ERR_INTERNAL = 7   /* unexpected failure */
} hg_status;

typedef struct hg_config hg_config;
typedef struct hg_field hg_field;

/* Interface version, bumped on breaking changes. */
int hg_abi_version(void);

/* Static name for a status code ("HG_OK", ...). */
const char* hg_status_name(hg_status status);

/* Message for the last failure on this thread; empty string if none. */
const char* hg_last_error(void);

/* Configuration lifecycle. */
hg_status hg_config_load(const char* path, hg_config** out);
hg_status hg_config_parse(const char* text, hg_config** out);
hg_status hg_config_set_seed(hg_config* cfg, uint64_t seed);
hg_status hg_config_set_threads(hg_config* cfg, int threads);
void hg_config_free(hg_config* cfg);

/* Runs one pipeline subcommand (solve, simulate, verify, gradient,
 * report); writes CSV artifacts and report.txt under out_dir.
 * failed_checks (may be NULL) receives the count of failed rows.
 * Returns HG_OK even when checks fail; inspect failed_checks. */
hg_status hg_run(const hg_config* cfg, const char* subcommand, const char* out_dir,
                 long* failed_checks);

/* Evaluates the configured operator on a dense symmetric matrix given in
 * row-major order (dim * dim entries). */
hg_status hg_operator_eval(const hg_config* cfg, const double* matrix, int dim,
                           double* out);

/* Solves the configured Dirichlet problem (full regularization
 * continuation; the returned field is the final one). */
hg_status hg_solve(const hg_config* cfg, hg_field** out);

int hg_field_dim(const hg_field* field);
double hg_field_residual(const hg_field* field);
hg_status hg_field_value_at(const hg_field* field, const double* x, int dim,
                            double* out);
hg_status hg_field_write_csv(const hg_field* field, const char* path);
void hg_field_free(hg_field* field);

#ifdef __cplusplus
}
#endif

#endif /* HESSGAME_H */
