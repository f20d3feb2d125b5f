#include "ldvae.h"

#include <cstdlib>
#include <cstring>
#include <string>

#include "ldvae/config.hpp"
#include "ldvae/data.hpp"
#include "ldvae/metrics.hpp"
#include "ldvae/model.hpp"
#include "ldvae/training.hpp"

struct ldvae_library {
  ldvae::EndmemberSet set;
};

struct ldvae_cube {
  ldvae::HsiCube cube;
};

struct ldvae_model {
  ldvae::LdvaeModel model;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out) std::memcpy(out, text.c_str(), text.size() + 1);
  return out;
}

ldvae_status fail(ldvae_status code, const char* message) {
  g_last_error = message;
  return code;
}

template <typename Fn>
ldvae_status wrap(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return LDVAE_OK;
  } catch (const ldvae::DivergenceError& e) {
    return fail(LDVAE_ERR_DIVERGED, e.what());
  } catch (const ldvae::ParseError& e) {
    return fail(LDVAE_ERR_PARSE, e.what());
  } catch (const ldvae::ShapeError& e) {
    return fail(LDVAE_ERR_SHAPE, e.what());
  } catch (const ldvae::DomainError& e) {
    return fail(LDVAE_ERR_DOMAIN, e.what());
  } catch (const ldvae::StateError& e) {
    return fail(LDVAE_ERR_STATE, e.what());
  } catch (const ldvae::IoError& e) {
    return fail(LDVAE_ERR_IO, e.what());
  } catch (const ldvae::DataError& e) {
    return fail(LDVAE_ERR_DATA, e.what());
  } catch (const ldvae::ConfigError& e) {
    return fail(LDVAE_ERR_CONFIG, e.what());
  } catch (const std::exception& e) {
    return fail(LDVAE_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(LDVAE_ERR_INTERNAL, "unknown error");
  }
}

ldvae_status require(bool condition, const char* message) {
  if (condition) return LDVAE_OK;
  return fail(LDVAE_ERR_INVALID_ARGUMENT, message);
}

} // namespace

extern "C" {

const char* ldvae_version(void) { return "0.1.0"; }

const char* ldvae_last_error(void) { return g_last_error.c_str(); }

void ldvae_string_free(char* text) { std::free(text); }

/* --- spectral library ------------------------------------------------- */

ldvae_status ldvae_library_parse(const char* path, ldvae_library** out) {
  if (require(path && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto lib = new ldvae_library{ldvae::parse_spectral_library(path)};
    *out = lib;
  });
}

void ldvae_library_free(ldvae_library* lib) { delete lib; }

size_t ldvae_library_count(const ldvae_library* lib) {
  return lib ? lib->set.count() : 0;
}

size_t ldvae_library_bands(const ldvae_library* lib) {
  return lib ? lib->set.bands() : 0;
}

const char* ldvae_library_name(const ldvae_library* lib, size_t index) {
  if (!lib || index >= lib->set.count()) return nullptr;
  return lib->set.names[index].c_str();
}

ldvae_status ldvae_library_spectrum(const ldvae_library* lib, size_t index,
                                    double* out_values) {
  if (require(lib && out_values, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  if (require(index < lib->set.count(), "index out of range") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<double>& v = lib->set.spectra[index].values;
    std::memcpy(out_values, v.data(), v.size() * sizeof(double));
  });
}

ldvae_status ldvae_library_wavelengths(const ldvae_library* lib,
                                       double* out_values) {
  if (require(lib && out_values, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<double>& v = lib->set.wavelengths();
    std::memcpy(out_values, v.data(), v.size() * sizeof(double));
  });
}

/* --- cubes ------------------------------------------------------------ */

ldvae_status ldvae_cube_generate(const ldvae_library* lib, size_t height,
                                 size_t width, const double* prior_alpha,
                                 uint64_t seed, ldvae_cube** out) {
  if (require(lib && prior_alpha && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    ldvae::DirichletParams prior;
    prior.alpha.assign(prior_alpha, prior_alpha + lib->set.count());
    *out = new ldvae_cube{
        ldvae::generate_cube(lib->set, height, width, prior, seed)};
  });
}

ldvae_status ldvae_cube_add_noise(const ldvae_cube* cube, double snr_db,
                                  uint64_t seed, ldvae_cube** out) {
  if (require(cube && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = new ldvae_cube{ldvae::add_noise(cube->cube, snr_db, seed)};
  });
}

ldvae_status ldvae_cube_read(const char* path, ldvae_cube** out) {
  if (require(path && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { *out = new ldvae_cube{ldvae::read_cube(path)}; });
}

ldvae_status ldvae_cube_write(const ldvae_cube* cube, const char* path) {
  if (require(cube && path, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { ldvae::write_cube(cube->cube, path); });
}

void ldvae_cube_free(ldvae_cube* cube) { delete cube; }

size_t ldvae_cube_height(const ldvae_cube* cube) {
  return cube ? cube->cube.height : 0;
}

size_t ldvae_cube_width(const ldvae_cube* cube) {
  return cube ? cube->cube.width : 0;
}

size_t ldvae_cube_bands(const ldvae_cube* cube) {
  return cube ? cube->cube.bands : 0;
}

size_t ldvae_cube_endmembers(const ldvae_cube* cube) {
  return cube ? cube->cube.n_endmembers : 0;
}

int ldvae_cube_has_ground_truth(const ldvae_cube* cube) {
  return cube && cube->cube.has_ground_truth() ? 1 : 0;
}

int ldvae_cube_has_wavelengths(const ldvae_cube* cube) {
  return cube && !cube->cube.wavelengths.empty() ? 1 : 0;
}

const char* ldvae_cube_endmember_name(const ldvae_cube* cube, size_t index) {
  if (!cube || index >= cube->cube.endmember_names.size()) return nullptr;
  return cube->cube.endmember_names[index].c_str();
}

ldvae_status ldvae_cube_pixels(const ldvae_cube* cube, double* out) {
  if (require(cube && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    std::memcpy(out, cube->cube.pixels.data(),
                cube->cube.pixels.size() * sizeof(double));
  });
}

ldvae_status ldvae_cube_ground_truth(const ldvae_cube* cube, double* out) {
  if (require(cube && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    if (!cube->cube.has_ground_truth())
      throw ldvae::StateError("cube has no ground truth");
    std::memcpy(out, cube->cube.ground_truth.data(),
                cube->cube.ground_truth.size() * sizeof(double));
  });
}

ldvae_status ldvae_cube_wavelengths(const ldvae_cube* cube, double* out) {
  if (require(cube && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    if (cube->cube.wavelengths.empty())
      throw ldvae::StateError("cube has no wavelength grid");
    std::memcpy(out, cube->cube.wavelengths.data(),
                cube->cube.wavelengths.size() * sizeof(double));
  });
}

ldvae_status ldvae_cube_measure_snr(const ldvae_cube* clean,
                                    const ldvae_cube* noisy, double* out_db) {
  if (require(clean && noisy && out_db, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { *out_db = ldvae::measure_snr_db(clean->cube, noisy->cube); });
}

ldvae_status ldvae_cube_normalize(const ldvae_cube* cube, ldvae_cube** out,
                                  double* out_scale) {
  if (require(cube && out && out_scale, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    auto [scaled, scale] = ldvae::normalize_cube(cube->cube);
    *out = new ldvae_cube{std::move(scaled)};
    *out_scale = scale;
  });
}

/* --- model ------------------------------------------------------------ */

ldvae_status ldvae_train(const ldvae_cube* cube, const char* config_json,
                         ldvae_model** out_model, char** out_report_json) {
  if (require(cube && config_json && out_model, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const ldvae::TrainConfig config = ldvae::parse_train_config(config_json);
    auto [model, report] = ldvae::train(cube->cube, config);
    *out_model = new ldvae_model{std::move(model)};
    if (out_report_json)
      *out_report_json = dup_string(ldvae::train_report_to_json(report));
  });
}

ldvae_status ldvae_model_read(const char* path, ldvae_model** out) {
  if (require(path && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { *out = new ldvae_model{ldvae::load_model(path)}; });
}

ldvae_status ldvae_model_write(const ldvae_model* model, const char* path) {
  if (require(model && path, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { ldvae::save_model(model->model, path); });
}

void ldvae_model_free(ldvae_model* model) { delete model; }

size_t ldvae_model_endmembers(const ldvae_model* model) {
  return model ? model->model.n_endmembers : 0;
}

size_t ldvae_model_bands(const ldvae_model* model) {
  return model ? model->model.n_bands : 0;
}

const char* ldvae_model_endmember_name(const ldvae_model* model,
                                       size_t index) {
  if (!model || index >= model->model.endmember_names.size()) return nullptr;
  return model->model.endmember_names[index].c_str();
}

int ldvae_model_has_wavelengths(const ldvae_model* model) {
  return model && !model->model.wavelengths.empty() ? 1 : 0;
}

ldvae_status ldvae_model_wavelengths(const ldvae_model* model, double* out) {
  if (require(model && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    if (model->model.wavelengths.empty())
      throw ldvae::StateError("model has no wavelength grid");
    std::memcpy(out, model->model.wavelengths.data(),
                model->model.wavelengths.size() * sizeof(double));
  });
}

ldvae_status ldvae_model_estimate(const ldvae_model* model, const double* x,
                                  size_t bands, double* out_abundances) {
  if (require(model && x && out_abundances, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const ldvae::AbundanceVector z =
        ldvae::estimate_abundances(model->model, {x, bands});
    std::memcpy(out_abundances, z.z.data(), z.size() * sizeof(double));
  });
}

ldvae_status ldvae_model_reconstruct(const ldvae_model* model, const double* x,
                                     size_t bands, double* out_reconstruction) {
  if (require(model && x && out_reconstruction, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<double> x_hat =
        ldvae::reconstruct(model->model, {x, bands});
    std::memcpy(out_reconstruction, x_hat.data(),
                x_hat.size() * sizeof(double));
  });
}

ldvae_status ldvae_model_extract(const ldvae_model* model,
                                 double* out_spectra) {
  if (require(model && out_spectra, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<std::vector<double>> spectra =
        ldvae::extract_endmember_spectra(model->model);
    for (std::size_t j = 0; j < spectra.size(); ++j)
      std::memcpy(out_spectra + j * model->model.n_bands, spectra[j].data(),
                  spectra[j].size() * sizeof(double));
  });
}

ldvae_status ldvae_model_unmix(const ldvae_model* model,
                               const ldvae_cube* cube,
                               double* out_abundances) {
  if (require(model && cube && out_abundances, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<double> a = ldvae::unmix_cube(model->model, cube->cube);
    std::memcpy(out_abundances, a.data(), a.size() * sizeof(double));
  });
}

ldvae_status ldvae_model_reconstruct_cube(const ldvae_model* model,
                                          const ldvae_cube* cube,
                                          double* out) {
  if (require(model && cube && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const std::vector<double> r =
        ldvae::reconstruct_cube(model->model, cube->cube);
    std::memcpy(out, r.data(), r.size() * sizeof(double));
  });
}

ldvae_status ldvae_evaluate(const ldvae_model* model, const ldvae_cube* cube,
                            const ldvae_library* lib,
                            char** out_report_json) {
  if (require(model && cube && out_report_json, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const ldvae::EvaluationReport report = ldvae::evaluate(
        model->model, cube->cube, lib ? &lib->set : nullptr);
    *out_report_json = dup_string(ldvae::evaluation_report_to_json(report));
  });
}

/* --- metrics ----------------------------------------------------------- */

ldvae_status ldvae_sad(const double* a, const double* b, size_t bands,
                       double* out) {
  if (require(a && b && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] { *out = ldvae::sad({a, bands}, {b, bands}); });
}

ldvae_status ldvae_rmse(const double* z_true, const double* z_est,
                        size_t pixels, size_t components, double* out) {
  if (require(z_true && z_est && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = ldvae::rmse({z_true, pixels * components},
                       {z_est, pixels * components}, components);
  });
}

ldvae_status ldvae_mse(const double* x, const double* x_hat, size_t pixels,
                       size_t bands, double* out) {
  if (require(x && x_hat && out, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    *out = ldvae::mse({x, pixels * bands}, {x_hat, pixels * bands}, bands);
  });
}

ldvae_status ldvae_summarize(const double* values, size_t count,
                             double out_stats[7]) {
  if (require(values && out_stats, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    const ldvae::MetricSummary s = ldvae::summarize({values, count});
    out_stats[0] = s.mean;
    out_stats[1] = s.std_dev;
    out_stats[2] = s.min;
    out_stats[3] = s.q25;
    out_stats[4] = s.q50;
    out_stats[5] = s.q75;
    out_stats[6] = s.max;
  });
}

/* --- exports ------------------------------------------------------------ */

namespace {

std::vector<std::string> collect_names(size_t count,
                                       const char* const* names) {
  std::vector<std::string> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i)
    out.emplace_back(names[i] ? names[i] : "endmember_" + std::to_string(i));
  return out;
}

} // namespace

ldvae_status ldvae_abundance_maps_write(const double* abundances,
                                        size_t height, size_t width,
                                        size_t count, const char* const* names,
                                        const char* dir, const char* prefix) {
  if (require(abundances && names && dir, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    ldvae::write_abundance_maps(dir, prefix ? prefix : "",
                                {abundances, height * width * count}, height,
                                width, collect_names(count, names));
  });
}

ldvae_status ldvae_abundance_csv_write(const double* abundances, size_t height,
                                       size_t width, size_t count,
                                       const char* const* names,
                                       const char* path) {
  if (require(abundances && names && path, "null argument") != LDVAE_OK)
    return LDVAE_ERR_INVALID_ARGUMENT;
  return wrap([&] {
    ldvae::write_abundance_csv(path, {abundances, height * width * count},
                               height, width, collect_names(count, names));
  });
}

} // extern "C"
