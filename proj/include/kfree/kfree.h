#ifndef KFREE_KFREE_H
#define KFREE_KFREE_H

#include <stddef.h>
#include <stdint.h>

#if defined(KFREE_BUILDING_LIBRARY)
#define KFREE_API __attribute__((visibility("default")))
#else
#define KFREE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status values returned by every call. Values >= KFREE_ERR_INVALID_PARAM
   mirror the error kinds of the solver core. */
typedef enum kfree_status {
    KFREE_OK = 0,
    KFREE_ERR_INVALID_PARAM,
    KFREE_ERR_VERTICAL_PLANE,
    KFREE_ERR_NON_SMOOTH_BOUNDARY_POINT,
    KFREE_ERR_EMPTY_INPUT,
    KFREE_ERR_OUT_OF_DOMAIN,
    KFREE_ERR_QUADRATURE_FAIL,
    KFREE_ERR_DUPLICATE_SITES,
    KFREE_ERR_NOT_A_POLYTOPE,
    KFREE_ERR_TOO_FEW_PLANES,
    KFREE_ERR_DEGENERATE_SOLUTION,
    KFREE_ERR_ZERO_CURVATURE,
    KFREE_ERR_CONDITION_VIOLATED,
    KFREE_ERR_NO_CONVERGENCE,
    KFREE_ERR_NON_ADMISSIBLE_BOUNDARY,
    KFREE_ERR_FREE_BOUNDARY_COLLAPSE,
    KFREE_ERR_NO_ROOT,
    KFREE_ERR_NO_SOLUTION,
    KFREE_ERR_DOMAINS_NOT_NESTED,
    KFREE_ERR_WRONG_PSI,
    KFREE_ERR_PARSE,
    KFREE_ERR_VALIDATION,
    KFREE_ERR_IO,
    KFREE_ERR_NULL_ARGUMENT,
    KFREE_ERR_INTERNAL
} kfree_status;

typedef struct kfree_config kfree_config;
typedef struct kfree_report kfree_report;

/* Message and kind of the last failure on the calling thread. */
KFREE_API const char* kfree_last_error(void);
KFREE_API kfree_status kfree_last_error_kind(void);

KFREE_API const char* kfree_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
KFREE_API void kfree_string_free(char* s);

/* Configuration (TOML or JSON, chosen by file extension). */
KFREE_API kfree_status kfree_config_load(const char* path, kfree_config** out);
/* format: "toml" or "json" */
KFREE_API kfree_status kfree_config_from_string(const char* text, const char* format, kfree_config** out);
KFREE_API kfree_status kfree_config_to_string(const kfree_config* cfg, const char* format, char** out);
KFREE_API kfree_status kfree_config_set_seed(kfree_config* cfg, uint64_t seed);
/* solver: "homogeneous", "elliptic" or "oracle"; revalidates the config. */
KFREE_API kfree_status kfree_config_set_solver(kfree_config* cfg, const char* solver);
KFREE_API void kfree_config_free(kfree_config* cfg);

/* Runs the configured solver and writes artifacts into out_dir (config's
   output dir when NULL). A report is produced even for nonexistence. */
KFREE_API kfree_status kfree_run(const kfree_config* cfg, const char* out_dir, kfree_report** out);
/* Writes the sweep CSV; *rows receives the row count. */
KFREE_API kfree_status kfree_sweep(const kfree_config* cfg, const char* out_dir, size_t* rows);

/* 0 converged and certified, 1 error or not certified, 2 nonexistence suspected. */
KFREE_API int kfree_report_exit_code(const kfree_report* rep);
KFREE_API const char* kfree_report_status(const kfree_report* rep);
KFREE_API const char* kfree_report_json(const kfree_report* rep);
/* NaN when no free boundary was produced. */
KFREE_API double kfree_report_fb_radius(const kfree_report* rep);
/* One line per certificate check: "PASS|FAIL <cert>.<check> residual=<r> tol=<t>". */
KFREE_API const char* kfree_report_certificate_text(const kfree_report* rep);
KFREE_API void kfree_report_free(kfree_report* rep);

/* Curvature bound for a domain whose minimal boundary curvature is kappa0
   (evaluated on the disk of radius 1/kappa0). psi: "one", "gauss", "power". */
KFREE_API kfree_status kfree_existence_condition(double kappa0, double h0, double lambda0, double K0, const char* psi,
                                                 double psi_power, int* holds, double* margin);

/* Free boundary radius of the radial solution on the disk of radius R0. */
KFREE_API kfree_status kfree_radial_fb_radius(int dim, double R0, double h0, double lambda0, double K0,
                                              const char* psi, double psi_power, double* r_fb);

#ifdef __cplusplus
}
#endif

#endif
