#include "ldvae/config.hpp"

#include <set>

#include <json.hpp>

namespace ldvae {

namespace {

using nlohmann::json;

const std::set<std::string> kTrainKeys = {
    "epochs",         "batch_size", "learning_rate",      "omega",
    "prior_alpha",    "seed",       "encoder_hidden",     "decoder_hidden",
    "mc_samples",     "shuffle",    "kl_mode",            "n_endmembers",
    "class_loss_weights",
};

json summary_to_json(const MetricSummary& s) {
  return json{{"mean", s.mean}, {"std", s.std_dev}, {"min", s.min},
              {"q25", s.q25},   {"q50", s.q50},     {"q75", s.q75},
              {"max", s.max}};
}

} // namespace

TrainConfig parse_train_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  for (const auto& item : doc.items())
    if (!kTrainKeys.contains(item.key()))
      throw ConfigError("unknown config key: " + item.key());

  TrainConfig config;
  try {
    if (doc.contains("epochs")) config.epochs = doc["epochs"].get<std::size_t>();
    if (doc.contains("batch_size"))
      config.batch_size = doc["batch_size"].get<std::size_t>();
    if (doc.contains("learning_rate"))
      config.learning_rate = doc["learning_rate"].get<double>();
    if (doc.contains("omega")) config.omega = doc["omega"].get<double>();
    if (doc.contains("prior_alpha"))
      config.prior_alpha = doc["prior_alpha"].get<double>();
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("encoder_hidden"))
      config.encoder_hidden =
          doc["encoder_hidden"].get<std::vector<std::size_t>>();
    if (doc.contains("decoder_hidden"))
      config.decoder_hidden =
          doc["decoder_hidden"].get<std::vector<std::size_t>>();
    if (doc.contains("mc_samples"))
      config.mc_samples = doc["mc_samples"].get<std::size_t>();
    if (doc.contains("shuffle")) config.shuffle = doc["shuffle"].get<bool>();
    if (doc.contains("kl_mode"))
      config.kl_mode = kl_mode_from_name(doc["kl_mode"].get<std::string>());
    if (doc.contains("n_endmembers"))
      config.n_endmembers = doc["n_endmembers"].get<std::size_t>();
    if (doc.contains("class_loss_weights"))
      config.class_loss_weights =
          doc["class_loss_weights"].get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ConfigError("config value has the wrong type: " +
                      std::string(e.what()));
  } catch (const DomainError& e) {
    throw ConfigError("config value invalid: " + std::string(e.what()));
  }
  config.validate();
  return config;
}

std::string train_config_to_json(const TrainConfig& config) {
  json doc;
  doc["epochs"] = config.epochs;
  doc["batch_size"] = config.batch_size;
  doc["learning_rate"] = config.learning_rate;
  doc["omega"] = config.omega;
  doc["prior_alpha"] = config.prior_alpha;
  doc["seed"] = config.seed;
  doc["encoder_hidden"] = config.encoder_hidden;
  doc["decoder_hidden"] = config.decoder_hidden;
  doc["mc_samples"] = config.mc_samples;
  doc["shuffle"] = config.shuffle;
  doc["kl_mode"] = kl_mode_name(config.kl_mode);
  if (config.n_endmembers != 0) doc["n_endmembers"] = config.n_endmembers;
  if (!config.class_loss_weights.empty())
    doc["class_loss_weights"] = config.class_loss_weights;
  return doc.dump();
}

std::string train_report_to_json(const TrainReport& report) {
  json epochs = json::array();
  for (std::size_t i = 0; i < report.epoch_mean_loss.size(); ++i) {
    const LossBreakdown& lb = report.epoch_mean_loss[i];
    epochs.push_back({{"epoch", i},
                      {"nll", lb.negative_log_likelihood},
                      {"kl", lb.kl},
                      {"abundance_mse", lb.abundance_mse},
                      {"total", lb.total}});
  }
  return json{{"epochs", epochs}, {"wall_seconds", report.wall_seconds}}.dump();
}

std::string evaluation_report_to_json(const EvaluationReport& report) {
  json doc;
  doc["reconstruction"] = {
      {"sad", summary_to_json(report.reconstruction_sad)},
      {"mse", summary_to_json(report.reconstruction_mse)}};
  if (report.has_extraction) {
    doc["extraction"] = {{"names", report.reference_names},
                         {"sad", report.per_endmember_sad},
                         {"mean_sad", report.mean_endmember_sad}};
  }
  if (report.has_abundance) {
    doc["abundance"] = {{"names", report.class_names},
                        {"rmse", report.per_class_rmse},
                        {"mean_rmse", report.mean_class_rmse},
                        {"overall_rmse", report.overall_rmse}};
  }
  return doc.dump();
}

} // namespace ldvae
