#ifndef OSTOP_H
#define OSTOP_H

/* C interface to the optimal-stopping solver library.
 *
 * Usage pattern: create a run from a JSON configuration string, execute one
 * of the commands, then read the result documents (JSON/CSV) back as
 * strings.  All strings returned by getters are owned by the run handle and
 * stay valid until the handle is destroyed.  Errors are reported through the
 * status code; ostop_last_error() describes the most recent failure on the
 * calling thread.
 */

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define OSTOP_API __declspec(dllexport)
#else
#define OSTOP_API __attribute__((visibility("default")))
#endif

typedef enum ostop_status {
  OSTOP_OK = 0,
  OSTOP_ERR_CONFIG = 1,      /* invalid configuration / input */
  OSTOP_ERR_SOLVER = 2,      /* numerical construction or solve failed */
  OSTOP_ERR_VERIFY = 3,      /* verification ran and failed */
  OSTOP_ERR_INVALID = 4,     /* bad arguments at the API boundary */
  OSTOP_ERR_INTERNAL = 5
} ostop_status;

typedef struct ostop_run ostop_run;

OSTOP_API const char* ostop_version(void);

/* Description of the last error raised on this thread; empty string if none. */
OSTOP_API const char* ostop_last_error(void);

/* Parse and validate a configuration document. */
OSTOP_API ostop_status ostop_run_create(const char* config_json, ostop_run** out);
OSTOP_API void ostop_run_destroy(ostop_run* run);

/* Commands.  Each populates the corresponding result documents. */
OSTOP_API ostop_status ostop_run_solve(ostop_run* run);
OSTOP_API ostop_status ostop_run_table(ostop_run* run, int grid_n);
/* all_passed receives 1/0; returns OSTOP_ERR_VERIFY when checks fail. */
OSTOP_API ostop_status ostop_run_verify(ostop_run* run, double perturb_threshold,
                                        int* all_passed);
OSTOP_API ostop_status ostop_run_simulate(ostop_run* run);

/* Result documents (NULL until the producing command has run). */
OSTOP_API const char* ostop_run_summary_json(const ostop_run* run);
OSTOP_API const char* ostop_run_table_csv(const ostop_run* run);
OSTOP_API const char* ostop_run_sturm_csv(const ostop_run* run);
OSTOP_API const char* ostop_run_verdicts_json(const ostop_run* run);
OSTOP_API const char* ostop_run_estimate_json(const ostop_run* run);

/* Pointwise evaluation of the solved value function (diffusion and levy
 * problems; requires a prior successful solve). */
OSTOP_API ostop_status ostop_run_value_at(ostop_run* run, double x, double* value);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* OSTOP_H */
