// ldvae — synthesize, train, unmix, extract, evaluate, reconstruct.
//
// Exit codes: 0 success, 2 input/validation error, 3 numeric divergence.

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldvae.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitDiverged = 3;

struct CliError {
  int code;
  std::string message;
};

void check(ldvae_status status, const std::string& context) {
  if (status == LDVAE_OK) return;
  const int code = status == LDVAE_ERR_DIVERGED ? kExitDiverged : kExitInput;
  throw CliError{code, context + ": " + ldvae_last_error()};
}

using LibraryPtr = std::unique_ptr<ldvae_library, decltype(&ldvae_library_free)>;
using CubePtr = std::unique_ptr<ldvae_cube, decltype(&ldvae_cube_free)>;
using ModelPtr = std::unique_ptr<ldvae_model, decltype(&ldvae_model_free)>;

LibraryPtr open_library(const std::string& path) {
  ldvae_library* lib = nullptr;
  check(ldvae_library_parse(path.c_str(), &lib), "library " + path);
  return {lib, &ldvae_library_free};
}

CubePtr open_cube(const std::string& path) {
  ldvae_cube* cube = nullptr;
  check(ldvae_cube_read(path.c_str(), &cube), "cube " + path);
  return {cube, &ldvae_cube_free};
}

ModelPtr open_model(const std::string& path) {
  ldvae_model* model = nullptr;
  check(ldvae_model_read(path.c_str(), &model), "checkpoint " + path);
  return {model, &ldvae_model_free};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw CliError{kExitInput, "cannot write " + path};
  out << text;
  if (!out) throw CliError{kExitInput, "write failed: " + path};
}

// ---------------------------------------------------------------------------
// Run configuration: one JSON document; command-line flags win over file
// values. Unknown keys are rejected up front.
// ---------------------------------------------------------------------------

const std::set<std::string> kConfigKeys = {
    // training (forwarded to the library)
    "epochs", "batch_size", "learning_rate", "omega", "prior_alpha", "seed",
    "encoder_hidden", "decoder_hidden", "mc_samples", "shuffle", "kl_mode",
    "n_endmembers", "class_loss_weights",
    // paths and synthesis
    "library", "cube", "checkpoint", "out_dir", "size", "snr_db",
};

const std::set<std::string> kTrainForwardKeys = {
    "epochs", "batch_size", "learning_rate", "omega", "prior_alpha", "seed",
    "encoder_hidden", "decoder_hidden", "mc_samples", "shuffle", "kl_mode",
    "n_endmembers", "class_loss_weights",
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError{kExitInput, "cannot open config: " + path};
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{kExitInput, "config " + path + ": " + e.what()};
  }
  if (!doc.is_object())
    throw CliError{kExitInput, "config must be a JSON object: " + path};
  for (const auto& item : doc.items())
    if (!kConfigKeys.contains(item.key()))
      throw CliError{kExitInput, "unknown config key: " + item.key()};
  return doc;
}

std::string train_config_json(const json& merged) {
  json out = json::object();
  for (const auto& item : merged.items())
    if (kTrainForwardKeys.contains(item.key())) out[item.key()] = item.value();
  return out.dump();
}

std::string require_path(const json& cfg, const std::string& key,
                         bool must_exist) {
  if (!cfg.contains(key) || !cfg[key].is_string() ||
      cfg[key].get<std::string>().empty())
    throw CliError{kExitInput, "missing required path: " + key};
  const std::string path = cfg[key].get<std::string>();
  if (must_exist && !fs::exists(path))
    throw CliError{kExitInput, key + " does not exist: " + path};
  return path;
}

std::string prepare_out_dir(const json& cfg) {
  const std::string dir = require_path(cfg, "out_dir", false);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kExitInput, "cannot create out dir: " + dir};
  return dir;
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos)
    throw CliError{kExitInput, "size must be <height>x<width>: " + text};
  try {
    const std::size_t h = std::stoull(text.substr(0, x));
    const std::size_t w = std::stoull(text.substr(x + 1));
    if (h == 0 || w == 0) throw CliError{kExitInput, "size must be positive"};
    return {h, w};
  } catch (const CliError&) {
    throw;
  } catch (...) {
    throw CliError{kExitInput, "size must be <height>x<width>: " + text};
  }
}

double parse_snr(const std::string& text) {
  std::string lower = text;
  for (char& c : lower) c = static_cast<char>(std::tolower(c));
  if (lower == "inf" || lower == "infinity")
    return std::numeric_limits<double>::infinity();
  try {
    return std::stod(text);
  } catch (...) {
    throw CliError{kExitInput, "snr must be a number or 'inf': " + text};
  }
}

std::vector<std::string> model_names(const ldvae_model* model) {
  const std::size_t n = ldvae_model_endmembers(model);
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n; ++j) {
    const char* name = ldvae_model_endmember_name(model, j);
    names.push_back(name ? name : "endmember_" + std::to_string(j));
  }
  return names;
}

std::vector<const char*> c_names(const std::vector<std::string>& names) {
  std::vector<const char*> out;
  for (const std::string& n : names) out.push_back(n.c_str());
  return out;
}

// Statistic rows in the summary layout: mean/std/min/25%/50%/75%/max.
const char* kStatNames[7] = {"mean", "std", "min", "25%", "50%", "75%", "max"};

std::string summary_csv(const json& sad, const json& mse) {
  const char* keys[7] = {"mean", "std", "min", "q25", "q50", "q75", "max"};
  std::string out = "statistic,sad,mse\n";
  for (int i = 0; i < 7; ++i) {
    out += kStatNames[i];
    out += "," + format_double(sad.at(keys[i]).get<double>());
    out += "," + format_double(mse.at(keys[i]).get<double>()) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_synth(const json& cfg) {
  const std::string library_path = require_path(cfg, "library", true);
  const std::string out_dir = prepare_out_dir(cfg);
  const auto [height, width] =
      parse_size(cfg.value("size", std::string("128x128")));
  const double snr_db = cfg.contains("snr_db") && cfg["snr_db"].is_number()
                            ? cfg["snr_db"].get<double>()
                            : parse_snr(cfg.value("snr_db", std::string("inf")));
  const std::uint64_t seed = cfg.value("seed", 0ULL);
  const double prior_alpha = cfg.value("prior_alpha", 1.0);
  if (!(prior_alpha > 0.0))
    throw CliError{kExitInput, "prior_alpha must be positive"};

  LibraryPtr lib = open_library(library_path);
  const std::size_t n = ldvae_library_count(lib.get());
  const std::vector<double> prior(n, prior_alpha);

  ldvae_cube* raw = nullptr;
  check(ldvae_cube_generate(lib.get(), height, width, prior.data(), seed, &raw),
        "generate");
  CubePtr clean(raw, &ldvae_cube_free);

  ldvae_cube* noisy_raw = nullptr;
  check(ldvae_cube_add_noise(clean.get(), snr_db, seed, &noisy_raw), "noise");
  CubePtr noisy(noisy_raw, &ldvae_cube_free);

  double measured = std::numeric_limits<double>::infinity();
  if (!std::isinf(snr_db))
    check(ldvae_cube_measure_snr(clean.get(), noisy.get(), &measured),
          "measure snr");

  const std::string cube_path = out_dir + "/cube.hsic";
  check(ldvae_cube_write(noisy.get(), cube_path.c_str()), "write cube");

  // Ground-truth maps.
  std::vector<std::string> names;
  for (std::size_t j = 0; j < n; ++j)
    names.push_back(ldvae_cube_endmember_name(noisy.get(), j));
  std::vector<double> gt(height * width * n);
  check(ldvae_cube_ground_truth(noisy.get(), gt.data()), "ground truth");
  check(ldvae_abundance_maps_write(gt.data(), height, width, n,
                                   c_names(names).data(), out_dir.c_str(),
                                   "gt_"),
        "write maps");

  json manifest;
  manifest["library"] = library_path;
  manifest["height"] = height;
  manifest["width"] = width;
  manifest["bands"] = ldvae_cube_bands(noisy.get());
  manifest["names"] = names;
  manifest["seed"] = seed;
  manifest["prior_alpha"] = prior_alpha;
  manifest["snr_db"] = std::isinf(snr_db) ? json("inf") : json(snr_db);
  manifest["measured_snr_db"] =
      std::isinf(measured) ? json("inf") : json(measured);
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");

  std::cout << "wrote " << cube_path << " (" << height << "x" << width << "x"
            << ldvae_cube_bands(noisy.get()) << ", " << n << " endmembers)\n";
  return kExitOk;
}

int cmd_train(const json& cfg) {
  const std::string cube_path = require_path(cfg, "cube", true);
  const std::string out_dir = prepare_out_dir(cfg);

  CubePtr cube = open_cube(cube_path);
  const std::string config_json = train_config_json(cfg);

  ldvae_model* model_raw = nullptr;
  char* report_raw = nullptr;
  check(ldvae_train(cube.get(), config_json.c_str(), &model_raw, &report_raw),
        "train");
  ModelPtr model(model_raw, &ldvae_model_free);
  std::unique_ptr<char, decltype(&ldvae_string_free)> report_guard(
      report_raw, &ldvae_string_free);

  const std::string checkpoint = out_dir + "/model.ldvae";
  check(ldvae_model_write(model.get(), checkpoint.c_str()), "write checkpoint");

  const json report = json::parse(report_raw);
  std::string log = "epoch,nll,kl,abundance_mse,total\n";
  for (const json& row : report.at("epochs")) {
    log += std::to_string(row.at("epoch").get<std::size_t>());
    log += "," + format_double(row.at("nll").get<double>());
    log += "," + format_double(row.at("kl").get<double>());
    log += "," + format_double(row.at("abundance_mse").get<double>());
    log += "," + format_double(row.at("total").get<double>()) + "\n";
  }
  write_file(out_dir + "/train_log.csv", log);

  std::cout << "wrote " << checkpoint << " ("
            << report.at("epochs").size() << " epochs, "
            << format_double(report.at("wall_seconds").get<double>())
            << "s)\n";
  return kExitOk;
}

int cmd_unmix(const json& cfg) {
  const std::string model_path = require_path(cfg, "checkpoint", true);
  const std::string cube_path = require_path(cfg, "cube", true);
  const std::string out_dir = prepare_out_dir(cfg);

  ModelPtr model = open_model(model_path);
  CubePtr cube = open_cube(cube_path);

  const std::size_t height = ldvae_cube_height(cube.get());
  const std::size_t width = ldvae_cube_width(cube.get());
  const std::size_t n = ldvae_model_endmembers(model.get());
  std::vector<double> abundances(height * width * n);
  check(ldvae_model_unmix(model.get(), cube.get(), abundances.data()),
        "unmix");

  const std::vector<std::string> names = model_names(model.get());
  check(ldvae_abundance_maps_write(abundances.data(), height, width, n,
                                   c_names(names).data(), out_dir.c_str(),
                                   "abundance_"),
        "write maps");
  const std::string csv_path = out_dir + "/abundances.csv";
  check(ldvae_abundance_csv_write(abundances.data(), height, width, n,
                                  c_names(names).data(), csv_path.c_str()),
        "write csv");

  std::cout << "wrote " << n << " abundance maps and " << csv_path << "\n";
  return kExitOk;
}

int cmd_extract(const json& cfg) {
  const std::string model_path = require_path(cfg, "checkpoint", true);
  const std::string out_dir = prepare_out_dir(cfg);

  ModelPtr model = open_model(model_path);
  const std::size_t n = ldvae_model_endmembers(model.get());
  const std::size_t bands = ldvae_model_bands(model.get());

  std::vector<double> spectra(n * bands);
  check(ldvae_model_extract(model.get(), spectra.data()), "extract");

  std::vector<double> wavelengths(bands);
  if (ldvae_model_has_wavelengths(model.get())) {
    check(ldvae_model_wavelengths(model.get(), wavelengths.data()),
          "wavelengths");
  } else {
    for (std::size_t b = 0; b < bands; ++b)
      wavelengths[b] = static_cast<double>(b);
  }

  const std::vector<std::string> names = model_names(model.get());
  std::string csv = "wavelength";
  for (const std::string& name : names) csv += "," + name;
  csv += "\n";
  for (std::size_t b = 0; b < bands; ++b) {
    csv += format_double(wavelengths[b]);
    for (std::size_t j = 0; j < n; ++j)
      csv += "," + format_double(spectra[j * bands + b]);
    csv += "\n";
  }
  const std::string path = out_dir + "/endmembers.csv";
  write_file(path, csv);
  std::cout << "wrote " << path << " (" << n << " endmembers x " << bands
            << " bands)\n";
  return kExitOk;
}

int cmd_eval(const json& cfg) {
  const std::string model_path = require_path(cfg, "checkpoint", true);
  const std::string cube_path = require_path(cfg, "cube", true);
  const std::string out_dir = prepare_out_dir(cfg);

  ModelPtr model = open_model(model_path);
  CubePtr cube = open_cube(cube_path);
  LibraryPtr lib(nullptr, &ldvae_library_free);
  if (cfg.contains("library"))
    lib = open_library(require_path(cfg, "library", true));

  char* report_raw = nullptr;
  check(ldvae_evaluate(model.get(), cube.get(), lib.get(), &report_raw),
        "evaluate");
  std::unique_ptr<char, decltype(&ldvae_string_free)> guard(
      report_raw, &ldvae_string_free);
  const json report = json::parse(report_raw);

  write_file(out_dir + "/reconstruction_summary.csv",
             summary_csv(report.at("reconstruction").at("sad"),
                         report.at("reconstruction").at("mse")));

  if (report.contains("extraction")) {
    const json& ext = report.at("extraction");
    std::string csv = "endmember,sad\n";
    const auto& names = ext.at("names");
    const auto& sad = ext.at("sad");
    for (std::size_t j = 0; j < names.size(); ++j)
      csv += names[j].get<std::string>() + "," +
             format_double(sad[j].get<double>()) + "\n";
    csv += "average," + format_double(ext.at("mean_sad").get<double>()) + "\n";
    write_file(out_dir + "/sad_per_endmember.csv", csv);
  }

  if (report.contains("abundance")) {
    const json& ab = report.at("abundance");
    std::string csv = "class,rmse\n";
    const auto& names = ab.at("names");
    const auto& rmse = ab.at("rmse");
    for (std::size_t j = 0; j < names.size(); ++j)
      csv += names[j].get<std::string>() + "," +
             format_double(rmse[j].get<double>()) + "\n";
    csv += "average," + format_double(ab.at("mean_rmse").get<double>()) + "\n";
    csv +=
        "overall," + format_double(ab.at("overall_rmse").get<double>()) + "\n";
    write_file(out_dir + "/rmse_per_class.csv", csv);
  } else {
    std::cerr << "warning: cube has no ground truth; RMSE table omitted\n";
  }

  std::cout << "wrote evaluation tables to " << out_dir << "\n";
  return kExitOk;
}

int cmd_reconstruct(const json& cfg) {
  const std::string model_path = require_path(cfg, "checkpoint", true);
  const std::string cube_path = require_path(cfg, "cube", true);
  const std::string out_dir = prepare_out_dir(cfg);

  ModelPtr model = open_model(model_path);
  CubePtr cube = open_cube(cube_path);

  const std::size_t height = ldvae_cube_height(cube.get());
  const std::size_t width = ldvae_cube_width(cube.get());
  const std::size_t bands = ldvae_cube_bands(cube.get());
  const std::size_t pixels = height * width;

  std::vector<double> original(pixels * bands);
  check(ldvae_cube_pixels(cube.get(), original.data()), "pixels");
  std::vector<double> reconstructed(pixels * bands);
  check(ldvae_model_reconstruct_cube(model.get(), cube.get(),
                                     reconstructed.data()),
        "reconstruct");

  std::string csv = "row,col";
  for (std::size_t b = 0; b < bands; ++b) csv += ",b" + std::to_string(b);
  csv += "\n";
  for (std::size_t r = 0; r < height; ++r)
    for (std::size_t c = 0; c < width; ++c) {
      csv += std::to_string(r) + "," + std::to_string(c);
      const double* x_hat = reconstructed.data() + (r * width + c) * bands;
      for (std::size_t b = 0; b < bands; ++b)
        csv += "," + format_double(x_hat[b]);
      csv += "\n";
    }
  write_file(out_dir + "/reconstructions.csv", csv);

  // Per-pixel SAD and MSE summaries.
  std::vector<double> sad_values(pixels);
  std::vector<double> mse_values(pixels);
  for (std::size_t p = 0; p < pixels; ++p) {
    check(ldvae_sad(original.data() + p * bands,
                    reconstructed.data() + p * bands, bands, &sad_values[p]),
          "sad");
    check(ldvae_mse(original.data() + p * bands,
                    reconstructed.data() + p * bands, 1, bands,
                    &mse_values[p]),
          "mse");
  }
  double sad_stats[7];
  double mse_stats[7];
  check(ldvae_summarize(sad_values.data(), pixels, sad_stats), "summarize");
  check(ldvae_summarize(mse_values.data(), pixels, mse_stats), "summarize");
  std::string summary = "statistic,sad,mse\n";
  for (int i = 0; i < 7; ++i)
    summary += std::string(kStatNames[i]) + "," +
               format_double(sad_stats[i]) + "," + format_double(mse_stats[i]) +
               "\n";
  write_file(out_dir + "/reconstruction_summary.csv", summary);

  std::cout << "wrote reconstructions for " << pixels << " pixels to "
            << out_dir << "\n";
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-Dirichlet VAE hyperspectral unmixing"};
  app.require_subcommand(1);

  // Shared state collected from flags; merged over the config file.
  std::string config_path;
  json flags = json::object();

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON run configuration");
    cmd->add_option_function<std::string>(
        "--out", [&](const std::string& v) { flags["out_dir"] = v; },
        "output directory");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t v) { flags["seed"] = v; }, "RNG seed");
  };

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic cube");
  add_common(synth);
  synth->add_option_function<std::string>(
      "--library", [&](const std::string& v) { flags["library"] = v; },
      "spectral library CSV");
  synth->add_option_function<std::string>(
      "--size", [&](const std::string& v) { flags["size"] = v; },
      "cube size <height>x<width> (default 128x128)");
  synth->add_option_function<std::string>(
      "--snr", [&](const std::string& v) { flags["snr_db"] = v; },
      "SNR in dB, or 'inf' (default inf)");
  synth->add_option_function<double>(
      "--prior", [&](double v) { flags["prior_alpha"] = v; },
      "symmetric Dirichlet prior for mixing (default 1.0)");

  CLI::App* train = app.add_subcommand("train", "train a model on a cube");
  add_common(train);
  train->add_option_function<std::string>(
      "--cube", [&](const std::string& v) { flags["cube"] = v; }, "input cube");
  train->add_option_function<std::size_t>(
      "--epochs", [&](std::size_t v) { flags["epochs"] = v; }, "epochs");
  train->add_option_function<std::size_t>(
      "--batch-size", [&](std::size_t v) { flags["batch_size"] = v; },
      "batch size");
  train->add_option_function<double>(
      "--lr", [&](double v) { flags["learning_rate"] = v; }, "learning rate");
  train->add_option_function<double>(
      "--omega", [&](double v) { flags["omega"] = v; },
      "abundance supervision weight");
  train->add_option_function<double>(
      "--prior", [&](double v) { flags["prior_alpha"] = v; },
      "symmetric model prior");
  train->add_option_function<std::size_t>(
      "--mc-samples", [&](std::size_t v) { flags["mc_samples"] = v; },
      "latent samples per pixel per step");
  train->add_option_function<std::string>(
      "--kl-mode", [&](const std::string& v) { flags["kl_mode"] = v; },
      "reduced | reduced_stirling | full");
  train->add_option_function<std::vector<std::size_t>>(
      "--enc-hidden",
      [&](const std::vector<std::size_t>& v) { flags["encoder_hidden"] = v; },
      "encoder hidden dims")
      ->delimiter(',');
  train->add_option_function<std::vector<std::size_t>>(
      "--dec-hidden",
      [&](const std::vector<std::size_t>& v) { flags["decoder_hidden"] = v; },
      "decoder hidden dims")
      ->delimiter(',');
  train->add_flag_function(
      "--no-shuffle",
      [&](std::int64_t count) {
        if (count > 0) flags["shuffle"] = false;
      },
      "disable per-epoch shuffling");

  CLI::App* unmix = app.add_subcommand("unmix", "estimate abundance maps");
  add_common(unmix);
  unmix->add_option_function<std::string>(
      "--model", [&](const std::string& v) { flags["checkpoint"] = v; },
      "model checkpoint");
  unmix->add_option_function<std::string>(
      "--cube", [&](const std::string& v) { flags["cube"] = v; }, "input cube");

  CLI::App* extract = app.add_subcommand("extract", "decode endmember spectra");
  add_common(extract);
  extract->add_option_function<std::string>(
      "--model", [&](const std::string& v) { flags["checkpoint"] = v; },
      "model checkpoint");

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a model on a cube");
  add_common(eval_cmd);
  eval_cmd->add_option_function<std::string>(
      "--model", [&](const std::string& v) { flags["checkpoint"] = v; },
      "model checkpoint");
  eval_cmd->add_option_function<std::string>(
      "--cube", [&](const std::string& v) { flags["cube"] = v; }, "input cube");
  eval_cmd->add_option_function<std::string>(
      "--library", [&](const std::string& v) { flags["library"] = v; },
      "reference spectral library");

  CLI::App* reconstruct =
      app.add_subcommand("reconstruct", "write per-pixel reconstructions");
  add_common(reconstruct);
  reconstruct->add_option_function<std::string>(
      "--model", [&](const std::string& v) { flags["checkpoint"] = v; },
      "model checkpoint");
  reconstruct->add_option_function<std::string>(
      "--cube", [&](const std::string& v) { flags["cube"] = v; }, "input cube");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInput;
  }

  try {
    json cfg = load_config(config_path);
    for (const auto& item : flags.items()) cfg[item.key()] = item.value();

    if (synth->parsed()) return cmd_synth(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (unmix->parsed()) return cmd_unmix(cfg);
    if (extract->parsed()) return cmd_extract(cfg);
    if (eval_cmd->parsed()) return cmd_eval(cfg);
    if (reconstruct->parsed()) return cmd_reconstruct(cfg);
    return kExitInput;
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInput;
  }
}
