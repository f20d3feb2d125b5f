#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "ldvae/model.hpp"
#include "ldvae/rng.hpp"

namespace test_helpers {

// Independent triple-loop product used as the matmul oracle.
inline ldvae::Tensor2 naive_matmul(const ldvae::Tensor2& a,
                                   const ldvae::Tensor2& b) {
  ldvae::Tensor2 out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a.at(i, k) * b.at(k, j);
      out.at(i, j) = acc;
    }
  return out;
}

inline ldvae::Tensor2 random_tensor(std::size_t rows, std::size_t cols,
                                    ldvae::KeyedRng& rng, double scale = 1.0) {
  ldvae::Tensor2 t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = (2.0 * rng.next_u01() - 1.0) * scale;
  return t;
}

// Relative agreement with a floor for near-zero pairs.
inline bool close_rel(double analytic, double numeric, double rtol,
                      double floor = 1e-7) {
  const double mag = std::max(std::abs(analytic), std::abs(numeric));
  if (mag < floor) return true;
  return std::abs(analytic - numeric) <= rtol * mag;
}

inline std::vector<ldvae::Tensor2*> model_params(ldvae::LdvaeModel& model) {
  std::vector<ldvae::Tensor2*> params;
  for (ldvae::Mlp* net : {&model.encoder, &model.decoder})
    for (std::size_t i = 0; i < net->layers.size(); ++i) {
      params.push_back(&net->weights[i]);
      params.push_back(&net->biases[i]);
    }
  return params;
}

inline double eval_total_loss(const ldvae::LdvaeModel& model,
                              std::span<const double> x,
                              std::span<const double> uniforms,
                              const std::optional<ldvae::AbundanceVector>& z_true) {
  ldvae::ForwardPass pass = ldvae::forward(model, x, uniforms);
  return ldvae::loss(model, x, pass, z_true).total;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central finite differences over every model parameter.
inline GradCheckResult gradcheck_model(
    ldvae::LdvaeModel& model, std::span<const double> x,
    std::span<const double> uniforms,
    const std::optional<ldvae::AbundanceVector>& z_true, double h = 1e-5,
    double floor = 1e-7) {
  ldvae::ForwardPass pass = ldvae::forward(model, x, uniforms);
  ldvae::loss(model, x, pass, z_true);
  const std::vector<ldvae::Tensor2> analytic = pass.tape.backward(pass.total_id);

  std::vector<ldvae::Tensor2*> params = model_params(model);
  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    ldvae::Tensor2& tensor = *params[p];
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + h;
      const double up = eval_total_loss(model, x, uniforms, z_true);
      tensor[i] = saved - h;
      const double down = eval_total_loss(model, x, uniforms, z_true);
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double mag = std::max(std::abs(a), std::abs(numeric));
      if (mag >= floor)
        result.max_rel_error =
            std::max(result.max_rel_error, std::abs(a - numeric) / mag);
      ++result.checked;
    }
  }
  return result;
}

// Small random model for gradient checks; dims stay tiny so finite
// differences are cheap.
inline ldvae::LdvaeModel tiny_model(std::size_t bands, std::size_t endmembers,
                                    std::uint64_t seed,
                                    ldvae::KlMode mode = ldvae::KlMode::reduced) {
  using ldvae::Activation;
  ldvae::KeyedRng rng(seed, {77});
  ldvae::LdvaeModel model;
  model.n_bands = bands;
  model.n_endmembers = endmembers;
  const std::size_t hidden = 2 + (seed % 3);

  model.encoder.layers = {{bands, hidden, Activation::relu},
                          {hidden, endmembers, Activation::softplus}};
  model.decoder.layers = {{endmembers, hidden, Activation::relu},
                          {hidden, 2 * bands, Activation::identity}};
  for (ldvae::Mlp* net : {&model.encoder, &model.decoder})
    for (const ldvae::LayerSpec& spec : net->layers) {
      net->weights.push_back(
          random_tensor(spec.input_dim, spec.output_dim, rng, 0.8));
      net->biases.push_back(random_tensor(1, spec.output_dim, rng, 0.3));
    }
  model.prior = ldvae::DirichletParams::symmetric(endmembers, 1.0);
  model.omega = 1.0;
  model.kl_mode = mode;
  model.validate();
  return model;
}

} // namespace test_helpers
