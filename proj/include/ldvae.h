/* ldvae.h — C interface to the LDVAE hyperspectral unmixing library.
 *
 * All objects are opaque handles created and destroyed by the library.
 * Functions return LDVAE_OK on success; on failure they return an error
 * code and ldvae_last_error() carries a thread-local message describing it.
 * Output buffers are caller-allocated; sizes follow from the accessor
 * functions (counts and band numbers). Strings allocated by the library
 * (report JSON) are released with ldvae_string_free().
 */
#ifndef LDVAE_H
#define LDVAE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LDVAE_API __declspec(dllexport)
#elif defined(__GNUC__)
#define LDVAE_API __attribute__((visibility("default")))
#else
#define LDVAE_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ldvae_status {
  LDVAE_OK = 0,
  LDVAE_ERR_INVALID_ARGUMENT = 1,
  LDVAE_ERR_SHAPE = 2,
  LDVAE_ERR_DOMAIN = 3,
  LDVAE_ERR_PARSE = 4,
  LDVAE_ERR_IO = 5,
  LDVAE_ERR_DATA = 6,
  LDVAE_ERR_CONFIG = 7,
  LDVAE_ERR_STATE = 8,
  LDVAE_ERR_DIVERGED = 9,
  LDVAE_ERR_INTERNAL = 10
} ldvae_status;

typedef struct ldvae_library ldvae_library; /* endmember spectra set */
typedef struct ldvae_cube ldvae_cube;       /* hyperspectral cube */
typedef struct ldvae_model ldvae_model;     /* trained/initialized model */

LDVAE_API const char* ldvae_version(void);
LDVAE_API const char* ldvae_last_error(void);
LDVAE_API void ldvae_string_free(char* text);

/* --- spectral library ------------------------------------------------- */

LDVAE_API ldvae_status ldvae_library_parse(const char* path,
                                           ldvae_library** out);
LDVAE_API void ldvae_library_free(ldvae_library* lib);
LDVAE_API size_t ldvae_library_count(const ldvae_library* lib);
LDVAE_API size_t ldvae_library_bands(const ldvae_library* lib);
LDVAE_API const char* ldvae_library_name(const ldvae_library* lib,
                                         size_t index);
/* out_values: bands() doubles. */
LDVAE_API ldvae_status ldvae_library_spectrum(const ldvae_library* lib,
                                              size_t index,
                                              double* out_values);
LDVAE_API ldvae_status ldvae_library_wavelengths(const ldvae_library* lib,
                                                 double* out_values);

/* --- cubes ------------------------------------------------------------ */

/* prior_alpha: one positive value per library endmember. */
LDVAE_API ldvae_status ldvae_cube_generate(const ldvae_library* lib,
                                           size_t height, size_t width,
                                           const double* prior_alpha,
                                           uint64_t seed, ldvae_cube** out);
/* snr_db: positive, or INFINITY for a noiseless copy. */
LDVAE_API ldvae_status ldvae_cube_add_noise(const ldvae_cube* cube,
                                            double snr_db, uint64_t seed,
                                            ldvae_cube** out);
LDVAE_API ldvae_status ldvae_cube_read(const char* path, ldvae_cube** out);
LDVAE_API ldvae_status ldvae_cube_write(const ldvae_cube* cube,
                                        const char* path);
LDVAE_API void ldvae_cube_free(ldvae_cube* cube);

LDVAE_API size_t ldvae_cube_height(const ldvae_cube* cube);
LDVAE_API size_t ldvae_cube_width(const ldvae_cube* cube);
LDVAE_API size_t ldvae_cube_bands(const ldvae_cube* cube);
LDVAE_API size_t ldvae_cube_endmembers(const ldvae_cube* cube);
LDVAE_API int ldvae_cube_has_ground_truth(const ldvae_cube* cube);
LDVAE_API int ldvae_cube_has_wavelengths(const ldvae_cube* cube);
LDVAE_API const char* ldvae_cube_endmember_name(const ldvae_cube* cube,
                                                size_t index);
/* out: height*width*bands doubles, band-interleaved by pixel. */
LDVAE_API ldvae_status ldvae_cube_pixels(const ldvae_cube* cube, double* out);
/* out: height*width*endmembers doubles, pixel-major. */
LDVAE_API ldvae_status ldvae_cube_ground_truth(const ldvae_cube* cube,
                                               double* out);
LDVAE_API ldvae_status ldvae_cube_wavelengths(const ldvae_cube* cube,
                                              double* out);
LDVAE_API ldvae_status ldvae_cube_measure_snr(const ldvae_cube* clean,
                                              const ldvae_cube* noisy,
                                              double* out_db);
LDVAE_API ldvae_status ldvae_cube_normalize(const ldvae_cube* cube,
                                            ldvae_cube** out,
                                            double* out_scale);

/* --- model ------------------------------------------------------------ */

/* config_json keys: epochs, batch_size, learning_rate, omega, prior_alpha,
 * seed, encoder_hidden, decoder_hidden, mc_samples, shuffle, kl_mode,
 * n_endmembers, class_loss_weights. Unknown keys are rejected.
 * out_report_json receives per-epoch losses; free with ldvae_string_free. */
LDVAE_API ldvae_status ldvae_train(const ldvae_cube* cube,
                                   const char* config_json,
                                   ldvae_model** out_model,
                                   char** out_report_json);
LDVAE_API ldvae_status ldvae_model_read(const char* path, ldvae_model** out);
LDVAE_API ldvae_status ldvae_model_write(const ldvae_model* model,
                                         const char* path);
LDVAE_API void ldvae_model_free(ldvae_model* model);

LDVAE_API size_t ldvae_model_endmembers(const ldvae_model* model);
LDVAE_API size_t ldvae_model_bands(const ldvae_model* model);
/* NULL when the model carries no names. */
LDVAE_API const char* ldvae_model_endmember_name(const ldvae_model* model,
                                                 size_t index);
LDVAE_API int ldvae_model_has_wavelengths(const ldvae_model* model);
LDVAE_API ldvae_status ldvae_model_wavelengths(const ldvae_model* model,
                                               double* out);

/* out_abundances: endmembers() doubles; the Dirichlet-mean estimate. */
LDVAE_API ldvae_status ldvae_model_estimate(const ldvae_model* model,
                                            const double* x, size_t bands,
                                            double* out_abundances);
/* out_reconstruction: bands() doubles. */
LDVAE_API ldvae_status ldvae_model_reconstruct(const ldvae_model* model,
                                               const double* x, size_t bands,
                                               double* out_reconstruction);
/* out_spectra: endmembers()*bands() doubles, one decoded one-hot spectrum
 * per row. */
LDVAE_API ldvae_status ldvae_model_extract(const ldvae_model* model,
                                           double* out_spectra);
/* out_abundances: height*width*endmembers doubles. */
LDVAE_API ldvae_status ldvae_model_unmix(const ldvae_model* model,
                                         const ldvae_cube* cube,
                                         double* out_abundances);
/* out: height*width*bands doubles. */
LDVAE_API ldvae_status ldvae_model_reconstruct_cube(const ldvae_model* model,
                                                    const ldvae_cube* cube,
                                                    double* out);
/* lib may be NULL (skips endmember-extraction scoring). Report JSON as
 * documented in the project README; free with ldvae_string_free. */
LDVAE_API ldvae_status ldvae_evaluate(const ldvae_model* model,
                                      const ldvae_cube* cube,
                                      const ldvae_library* lib,
                                      char** out_report_json);

/* --- metrics ----------------------------------------------------------- */

LDVAE_API ldvae_status ldvae_sad(const double* a, const double* b,
                                 size_t bands, double* out);
LDVAE_API ldvae_status ldvae_rmse(const double* z_true, const double* z_est,
                                  size_t pixels, size_t components,
                                  double* out);
LDVAE_API ldvae_status ldvae_mse(const double* x, const double* x_hat,
                                 size_t pixels, size_t bands, double* out);
/* out_stats: mean, std, min, q25, q50, q75, max. */
LDVAE_API ldvae_status ldvae_summarize(const double* values, size_t count,
                                       double out_stats[7]);

/* --- exports ------------------------------------------------------------ */

/* One 8-bit PGM per endmember at <dir>/<prefix><name>.pgm. */
LDVAE_API ldvae_status ldvae_abundance_maps_write(const double* abundances,
                                                  size_t height, size_t width,
                                                  size_t count,
                                                  const char* const* names,
                                                  const char* dir,
                                                  const char* prefix);
LDVAE_API ldvae_status ldvae_abundance_csv_write(const double* abundances,
                                                 size_t height, size_t width,
                                                 size_t count,
                                                 const char* const* names,
                                                 const char* path);

#ifdef __cplusplus
}
#endif

#endif /* LDVAE_H */
