/* C interface to the Rydberg EIT receiver simulator. */
#ifndef RYDSIM_RYDSIM_H
#define RYDSIM_RYDSIM_H

#include <stddef.h>

#if defined(_WIN32)
#define RYDSIM_API __declspec(dllexport)
#else
#define RYDSIM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as CLI exit codes. */
typedef enum rydsim_status {
  RYDSIM_OK = 0,
  RYDSIM_ERR_CONFIG = 2,   /* parse or validation failure */
  RYDSIM_ERR_SOLVER = 3,   /* numerical failure */
  RYDSIM_ERR_IO = 4,       /* file read/write */
  RYDSIM_ERR_DOMAIN = 5,   /* invalid argument */
  RYDSIM_ERR_INTERNAL = 6
} rydsim_status;

typedef struct rydsim_config rydsim_config;
typedef struct rydsim_result rydsim_result;

/* Message of the last failed call on this thread ("" if none). */
RYDSIM_API const char* rydsim_last_error(void);
RYDSIM_API const char* rydsim_version(void);

/* Strings returned through char** are owned by the caller. */
RYDSIM_API void rydsim_string_free(char* text);

RYDSIM_API rydsim_status rydsim_config_default(rydsim_config** out);
RYDSIM_API rydsim_status rydsim_config_load(const char* path, rydsim_config** out);
RYDSIM_API rydsim_status rydsim_config_parse(const char* text, rydsim_config** out);
/* key is dotted, e.g. "cell.n_layers"; the config is unchanged on failure. */
RYDSIM_API rydsim_status rydsim_config_set(rydsim_config* config, const char* key,
                                           const char* value);
RYDSIM_API rydsim_status rydsim_config_echo(const rydsim_config* config, char** out_text);
RYDSIM_API void rydsim_config_free(rydsim_config* config);

/* preset: fig3-conventional, fig3-rma, fig4, fig5 or custom. threads 0 = 1. */
RYDSIM_API rydsim_status rydsim_run_experiment(const rydsim_config* config, const char* preset,
                                               unsigned threads, rydsim_result** out);
RYDSIM_API rydsim_status rydsim_result_write(const rydsim_result* result, const char* out_dir,
                                             int svg);
RYDSIM_API rydsim_status rydsim_result_csv(const rydsim_result* result, char** out_text);
RYDSIM_API rydsim_status rydsim_result_json(const rydsim_result* result, char** out_text);
RYDSIM_API size_t rydsim_result_series_count(const rydsim_result* result);
/* Borrowed pointers, valid until rydsim_result_free. */
RYDSIM_API rydsim_status rydsim_result_series(const rydsim_result* result, size_t index,
                                              const double** x, const double** value,
                                              size_t* length);
RYDSIM_API double rydsim_result_number_density(const rydsim_result* result);
RYDSIM_API double rydsim_result_wall_time(const rydsim_result* result);
RYDSIM_API void rydsim_result_free(rydsim_result* result);

/* Density (m^-3) giving the coupling-off carrier transmission `target`. */
RYDSIM_API rydsim_status rydsim_calibrate_density(const rydsim_config* config, double target,
                                                  unsigned threads, double* out_density);

/* |dy/dx| of a least-squares polynomial at each x; slope_out has n entries. */
RYDSIM_API rydsim_status rydsim_fit_slope(const double* x, const double* y, size_t n, int degree,
                                          double* slope_out, double* residual_out);

/* Reads a trace CSV, fits every series, returns the slopes as trace CSV. */
RYDSIM_API rydsim_status rydsim_slopes_from_csv(const char* path, int degree, char** out_text);

/* sqrt(2e) / (slope sqrt(power eta)), V m^-1 Hz^-1/2. */
RYDSIM_API rydsim_status rydsim_sensitivity(double slope, double power, double eta,
                                            double* out);

#ifdef __cplusplus
}
#endif

#endif
