#pragma once

#include <string>

#include "ldvae/training.hpp"

namespace ldvae {

// JSON bridge for run configuration and reports; the keys here are the
// single source of truth shared by the C API and the CLI.

/// Strict parse: unknown keys raise ConfigError.
TrainConfig parse_train_config(const std::string& json_text);

std::string train_config_to_json(const TrainConfig& config);

/// {"epochs": [{"epoch","nll","kl","abundance_mse","total"}...],
///  "wall_seconds": s}
std::string train_report_to_json(const TrainReport& report);

/// {"reconstruction": {"sad": {...}, "mse": {...}},
///  "extraction"?: {"names", "sad", "mean_sad"},
///  "abundance"?: {"names", "rmse", "mean_rmse", "overall_rmse"}}
std::string evaluation_report_to_json(const EvaluationReport& report);

} // namespace ldvae
