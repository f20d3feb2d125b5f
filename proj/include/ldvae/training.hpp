#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ldvae/data.hpp"
#include "ldvae/metrics.hpp"
#include "ldvae/model.hpp"

namespace ldvae {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double omega = 1.0;
  double prior_alpha = 1.0; // symmetric prior value
  std::uint64_t seed = 0;
  std::vector<std::size_t> encoder_hidden = {512, 256};
  std::vector<std::size_t> decoder_hidden = {256, 512};
  std::size_t mc_samples = 1;
  bool shuffle = true;
  KlMode kl_mode = KlMode::reduced;
  // Endmember count for unlabeled cubes (0 = take from ground truth).
  std::size_t n_endmembers = 0;
  // Optional per-class loss weights (by dominant ground-truth class).
  std::vector<double> class_loss_weights;

  void validate() const;
};

struct TrainReport {
  std::vector<LossBreakdown> epoch_mean_loss; // one entry per epoch
  double wall_seconds = 0.0;
  std::string checkpoint_path; // filled by callers that persist the model
};

/// Builds a fresh seeded model and trains it for config.epochs epochs.
/// Every stochastic choice (init, shuffle, uniform draws) is keyed off the
/// seed, so identical (cube, config) give a bit-identical model.
std::pair<LdvaeModel, TrainReport> train(const HsiCube& cube,
                                         const TrainConfig& config);

/// Glorot-uniform weights (+- sqrt(6/(fan_in+fan_out))), zero biases.
/// `stream` separates the encoder and decoder draws.
Mlp init_mlp(const std::vector<LayerSpec>& layers, std::uint64_t seed,
             std::uint64_t stream);

/// Seeded shuffle-then-split of [0, count); returns (train, eval) indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t count, double train_fraction, std::uint64_t seed);

/// Restrict a cube to the given pixel indices (1 x m layout).
HsiCube take_pixels(const HsiCube& cube, const std::vector<std::size_t>& indices);

struct EvaluationReport {
  MetricSummary reconstruction_sad;
  MetricSummary reconstruction_mse;

  bool has_extraction = false;
  std::vector<std::string> reference_names;
  std::vector<double> per_endmember_sad; // reference order
  double mean_endmember_sad = 0.0;

  bool has_abundance = false;
  std::vector<std::string> class_names;
  std::vector<double> per_class_rmse;
  double mean_class_rmse = 0.0;
  double overall_rmse = 0.0;
};

/// Reconstruction statistics over every pixel, endmember-extraction SAD
/// against `library` (when given), and abundance RMSE against the cube's
/// ground truth (when present). Extraction matching aligns the latent order
/// with the reference order before RMSE is computed.
EvaluationReport evaluate(const LdvaeModel& model, const HsiCube& cube,
                          const EndmemberSet* library);

/// Per-pixel Dirichlet-mean abundances, pixel-major (pixels x n).
std::vector<double> unmix_cube(const LdvaeModel& model, const HsiCube& cube);

/// Per-pixel deterministic reconststructions, pixel-major (pixels x K).
std::vector<double> reconstruct_cube(const LdvaeModel& model,
                                     const HsiCube& cube);

} // namespace ldvae
