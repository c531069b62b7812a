/* drlab — Duchon–Robert energy-flux laboratory.
 *
 * C interface to the shared library: opaque handles, integer status codes,
 * thread-local error messages. All functions return DRLAB_OK (0) on success;
 * on failure the handle outputs are left untouched and drlab_last_error()
 * describes the problem for the calling thread.
 */
#ifndef DRLAB_H
#define DRLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#define DRLAB_ABI_VERSION 1

typedef enum drlab_status {
  DRLAB_OK = 0,
  DRLAB_ERR_PARAM = 1,     /* bad argument value */
  DRLAB_ERR_DOMAIN = 2,    /* point outside the evaluable domain */
  DRLAB_ERR_PRECOND = 3,   /* operation preconditions not met */
  DRLAB_ERR_REFUSED = 4,   /* mathematically meaningful refusal */
  DRLAB_ERR_PARSE = 5,     /* malformed input */
  DRLAB_ERR_IO = 6,        /* file system problem */
  DRLAB_ERR_INTERNAL = 7
} drlab_status;

typedef struct drlab_field drlab_field;
typedef struct drlab_kernel drlab_kernel;

const char* drlab_version(void);
int drlab_abi_version(void);

/* Message for the most recent failure on this thread; never NULL. */
const char* drlab_last_error(void);

/* ---- fields ------------------------------------------------------------ */

/* params_json may be NULL or "{}"; see drlab_catalog_text() for names. */
drlab_status drlab_field_catalog(const char* name, const char* params_json, drlab_field** out);
drlab_status drlab_field_from_grid_file(const char* path, drlab_field** out);
void drlab_field_free(drlab_field* f);

int drlab_field_dim(const drlab_field* f);
double drlab_field_max_abs(const drlab_field* f);
int drlab_field_divergence_free(const drlab_field* f);

/* x and out hold dim doubles. */
drlab_status drlab_field_eval(const drlab_field* f, const double* x, double* out);
drlab_status drlab_field_increment(const drlab_field* f, const double* x, const double* xi,
                                   double* out);
drlab_status drlab_field_kinetic_energy(const drlab_field* f, double* out);

/* ---- kernels ------------------------------------------------------------ */

drlab_status drlab_kernel_from_json(const char* spec_json, drlab_kernel** out);
void drlab_kernel_free(drlab_kernel* k);

typedef struct drlab_kernel_report {
  double even_residual;
  double min_value;
  double mass_error;
  double mass_error_tolerance;
  int support_ok;
  int usable;
} drlab_kernel_report;

drlab_status drlab_kernel_validate(const drlab_kernel* k, drlab_kernel_report* out);
drlab_status drlab_kernel_eval(const drlab_kernel* k, const double* z, double* out);

/* ---- flux ---------------------------------------------------------------- */

/* Signed and absolute integrals of the mollified energy flux over the
 * axis-aligned box [lo, hi]. */
drlab_status drlab_total_flux(const drlab_field* f, const drlab_kernel* k, double eps,
                              const double* lo, const double* hi, double* signed_out,
                              double* absolute_out);

/* ---- scenarios ----------------------------------------------------------- */

typedef struct drlab_run_options {
  int deterministic;          /* force single-worker bit-stable reductions */
  int workers;                /* 0 = hardware default */
  const char* out_dir;        /* NULL = scenario file setting */
} drlab_run_options;

/* Validates without running. */
drlab_status drlab_scenario_validate(const char* path);

/* Runs the scenario; *exit_code receives 0 (success), 2 (refusal) or
 * 1 (error), mirroring the CLI contract. The call itself returns DRLAB_OK
 * whenever the scenario could be parsed and dispatched. */
drlab_status drlab_scenario_run(const char* path, const drlab_run_options* options,
                                int* exit_code);

/* Static catalog and scenario-schema listing. */
const char* drlab_catalog_text(void);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* DRLAB_H */
