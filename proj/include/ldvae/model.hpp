#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ldvae/distributions.hpp"
#include "ldvae/tape.hpp"

namespace ldvae {

struct LayerSpec {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  Activation activation = Activation::identity;
};

/// Fully connected stack; weights[i] is input_dim x output_dim, biases[i]
/// is 1 x output_dim.
struct Mlp {
  std::vector<LayerSpec> layers;
  std::vector<Tensor2> weights;
  std::vector<Tensor2> biases;

  std::size_t input_dim() const { return layers.front().input_dim; }
  std::size_t output_dim() const { return layers.back().output_dim; }
  void validate() const;
};

// Encoder outputs are floored at this value so alpha stays positive.
inline constexpr double kAlphaFloor = 1e-6;

/// Encoder (x -> alpha), Dirichlet bottleneck, decoder (z -> mu, log_var).
struct LdvaeModel {
  Mlp encoder; // K -> ... -> n, softplus head
  Mlp decoder; // n -> ... -> 2K, identity head
  std::size_t n_endmembers = 0;
  std::size_t n_bands = 0;
  DirichletParams prior;
  double omega = 1.0;
  KlMode kl_mode = KlMode::reduced;
  std::vector<std::string> endmember_names; // optional
  std::vector<double> wavelengths;          // optional

  void validate() const;
};

struct LossBreakdown {
  double total = 0.0;
  double negative_log_likelihood = 0.0;
  double kl = 0.0;
  double abundance_mse = 0.0; // pre-omega
};

/// One differentiable pass: encode -> sample -> decode on a shared tape.
/// Parameter ids are ordered encoder W0,b0,W1,b1,... then decoder likewise,
/// matching the checkpoint parameter order.
struct ForwardPass {
  GradientTape tape;
  std::vector<GradientTape::ValueId> parameter_ids;
  GradientTape::ValueId alpha_id = 0;
  GradientTape::ValueId z_id = 0;
  GradientTape::ValueId mu_id = 0;
  GradientTape::ValueId log_var_id = 0;
  GradientTape::ValueId total_id = 0;
  bool has_loss = false;

  DirichletParams alpha;
  AbundanceVector z;
  DiagGaussian reconstruction;
};

/// Deterministic encoder pass; every component of the result is >= kAlphaFloor.
DirichletParams encode(const LdvaeModel& model, std::span<const double> x);

/// Deterministic decoder pass; z must be on the simplex within 1e-4.
DiagGaussian decode(const LdvaeModel& model, const AbundanceVector& z);

/// Differentiable composite pass; `uniforms` has one draw per endmember.
ForwardPass forward(const LdvaeModel& model, std::span<const double> x,
                    std::span<const double> uniforms);

/// Appends the loss nodes to the pass and returns the breakdown. The total
/// is nll + kl + omega * abundance_mse; without z_true the MSE term is zero.
LossBreakdown loss(const LdvaeModel& model, std::span<const double> x,
                   ForwardPass& pass,
                   const std::optional<AbundanceVector>& z_true);

/// Dirichlet mean alpha / sum(alpha); no sampling.
AbundanceVector estimate_abundances(const LdvaeModel& model,
                                    std::span<const double> x);

/// Decoded means of the one-hot abundance vectors, one spectrum per
/// endmember, each of length n_bands.
std::vector<std::vector<double>> extract_endmember_spectra(const LdvaeModel& model);

/// decode(estimate_abundances(x)).mu.
std::vector<double> reconstruct(const LdvaeModel& model,
                                std::span<const double> x);

// Checkpoint file: magic "LDVAE001", u32 little-endian header length, JSON
// header, then parameters as little-endian doubles in declaration order.
void save_model(const LdvaeModel& model, const std::string& path);
LdvaeModel load_model(const std::string& path);

} // namespace ldvae
