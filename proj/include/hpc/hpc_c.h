#ifndef HPC_C_H
#define HPC_C_H

/* C interface to the hybrid pi-calculus workbench.
 *
 * Every function returns an hpc_status. On failure hpc_last_error() describes the
 * problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * hpc_free_string. Config arguments are JSON objects; NULL or "" means defaults.
 */

#include <stddef.h>

#if defined(_WIN32)
#define HPC_API __declspec(dllexport)
#else
#define HPC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hpc_status {
    HPC_OK = 0,
    HPC_REFUTED = 1,   /* bisimulation refuted or certificate violated */
    HPC_EUSAGE = 2,    /* bad argument or config */
    HPC_EMODEL = 3,    /* model cannot be analysed (open system, unsupported construct, kernel error) */
    HPC_EPARSE = 4,
    HPC_ENOTFOUND = 5,
    HPC_EIO = 6,
    HPC_EINTERNAL = 7
} hpc_status;

typedef struct hpc_model hpc_model;

HPC_API const char* hpc_version(void);
HPC_API const char* hpc_last_error(void);
HPC_API void hpc_free_string(char* s);

/* ---- models */
HPC_API int hpc_model_parse(const char* text, hpc_model** out);
HPC_API int hpc_model_load_file(const char* path, hpc_model** out);
/* index selects the file of a multi-file zoo entry (0 for single-file entries) */
HPC_API int hpc_model_load_zoo(const char* id, int index, hpc_model** out);
HPC_API void hpc_model_free(hpc_model* m);
HPC_API int hpc_model_ast_json(const hpc_model* m, char** out);
HPC_API int hpc_model_pretty(const hpc_model* m, char** out);

/* ---- simulation
 * config: {"horizon", "step", "seed", "policy": "first"|"random"|"exhaustive", "depth",
 *          "zeno_max_events", "zeno_window", "sample_stride", "max_traces", "all_vars",
 *          "scenario": {"label", "inputs": {"u": [[t, value], ...]}}}
 * Any output pointer may be NULL. summary is a JSON object.
 */
HPC_API int hpc_simulate(const hpc_model* m, const char* config, char** trace_jsonl, char** trajectory_csv,
                         char** summary);

/* ---- equivalence
 * lts config: {"universe": [0, 1], "max_states", "depth"}
 * approx config: simulation keys plus {"observe": "x,p:q", "scenarios": [scenario, ...]}
 */
HPC_API int hpc_lts(const hpc_model* m, const char* config, char** out_json);
HPC_API int hpc_bisim(const hpc_model* a, const hpc_model* b, const char* mode, const char* config, char** out_json);
HPC_API int hpc_approx(const hpc_model* a, const hpc_model* b, double eps, double delta, const char* config,
                       char** out_json);
/* m must start with a continuous prefix; config may set "delta" (else suggested), "simulate": bool */
HPC_API int hpc_discretize(const hpc_model* m, double eps, double duration, const char* config, char** out_json);

/* ---- certificates; config: {"samples", "tol", "max_attempts_factor"} */
HPC_API int hpc_certcheck(const char* automaton_json, const char* certificate_json, const char* config,
                          char** out_json);

/* ---- zoo */
HPC_API int hpc_zoo_list(char** out_json);
HPC_API int hpc_zoo_show(const char* id, char** out_json);
/* disturbance scenario set for `horizon` seconds as a JSON array */
HPC_API int hpc_zoo_scenarios(double horizon, int random, unsigned long long seed, char** out_json);
HPC_API int hpc_control_f(double p0, double v0, double pe, double d, double* out);
HPC_API int hpc_v_lim(double p0, double pe, double* out);

#ifdef __cplusplus
}
#endif

#endif
