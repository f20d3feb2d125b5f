#pragma once

#include <span>
#include <string>
#include <vector>

#include "ldvae/tape.hpp"

namespace ldvae {

/// ln Gamma(x) for x > 0. Absolute error below 1e-10 on [1e-3, 1e4].
double log_gamma(double x);

/// psi(x) = d/dx ln Gamma(x) for x > 0. Absolute error below 1e-8 on
/// [1e-3, 1e4].
double digamma(double x);

/// psi'(x) for x > 0; used by the KL gradients.
double trigamma(double x);

/// Concentration vector of a Dirichlet distribution.
struct DirichletParams {
  std::vector<double> alpha;

  DirichletParams() = default;
  explicit DirichletParams(std::vector<double> a);
  static DirichletParams symmetric(std::size_t n, double value);

  std::size_t size() const { return alpha.size(); }
  double sum() const;
  void validate() const; // length >= 2, every component > 0
};

/// Point on the n-simplex: non-negative, sums to 1 within 1e-6.
struct AbundanceVector {
  std::vector<double> z;

  AbundanceVector() = default;
  explicit AbundanceVector(std::vector<double> values) : z(std::move(values)) {}
  static AbundanceVector one_hot(std::size_t n, std::size_t index);

  std::size_t size() const { return z.size(); }
  bool on_simplex(double tolerance = 1e-6) const;
};

inline constexpr double kLogVarMin = -12.0;
inline constexpr double kLogVarMax = 6.0;

/// Diagonal multivariate Normal over K bands; log_var is clamped to
/// [kLogVarMin, kLogVarMax] on construction.
struct DiagGaussian {
  std::vector<double> mu;
  std::vector<double> log_var;

  DiagGaussian() = default;
  DiagGaussian(std::vector<double> mean, std::vector<double> log_variance);
  std::size_t size() const { return mu.size(); }
};

/// Approximate inverse Gamma CDF, (u * alpha * Gamma(alpha))^(1/alpha) / beta,
/// evaluated in log space. This is the small-shape approximation used for
/// reparameterized sampling, not an exact CDF inversion.
double inverse_gamma_cdf_approx(double u, double alpha, double beta);

// Uniform draws are clamped into this range before log-space evaluation.
inline constexpr double kUniformClampLo = 1e-6;
inline constexpr double kUniformClampHi = 1.0 - 1e-6;

/// Reparameterized Dirichlet draw: per-component approximate inverse Gamma
/// CDF at beta = 1, normalized by the coordinate sum. `uniforms` supplies the
/// external randomness, one value per component.
AbundanceVector sample_dirichlet(const DirichletParams& params,
                                 std::span<const double> uniforms);

enum class KlMode {
  reduced,          // sum-form rewrite with exact digamma (default)
  reduced_stirling, // same, with psi(a) ~ ln(a) - 1/(2a)
  full,             // standard Dirichlet KL incl. aggregate terms
};

const char* kl_mode_name(KlMode mode);
KlMode kl_mode_from_name(const std::string& name);

/// Sum-form KL rewrite: sum lnG(a_k) - sum lnG(ah_k) + sum (ah_k - a_k) psi(ah_k).
/// Note this drops the aggregate-concentration terms of the standard
/// Dirichlet KL, so it can be negative.
double dirichlet_kl_reduced(const DirichletParams& alpha_hat,
                          const DirichletParams& alpha_prior);

/// Standard KL(Dirichlet(alpha_hat) || Dirichlet(alpha_prior)). Non-negative.
double dirichlet_kl_full(const DirichletParams& alpha_hat,
                         const DirichletParams& alpha_prior);

double dirichlet_kl(const DirichletParams& alpha_hat,
                    const DirichletParams& alpha_prior, KlMode mode);

/// d KL / d alpha_hat for any of the three modes.
std::vector<double> dirichlet_kl_grad(const DirichletParams& alpha_hat,
                                      const DirichletParams& alpha_prior,
                                      KlMode mode);

/// sum_k [ -0.5 ln 2pi - 0.5 lv_k - (x_k - mu_k)^2 / (2 exp(lv_k)) ].
double diag_gaussian_log_likelihood(std::span<const double> x,
                                    const DiagGaussian& g);

// --- tape-registered versions (differentiable in their tensor inputs) ---

/// alpha is a 1xn value on the tape; returns a 1xn simplex value whose
/// partial derivatives with respect to alpha are registered on the tape.
GradientTape::ValueId sample_dirichlet_on_tape(GradientTape& tape,
                                               GradientTape::ValueId alpha,
                                               std::span<const double> uniforms);

/// KL between the 1xn alpha_hat on the tape and a fixed prior; 1x1 output.
GradientTape::ValueId dirichlet_kl_on_tape(GradientTape& tape,
                                           GradientTape::ValueId alpha_hat,
                                           const DirichletParams& prior,
                                           KlMode mode);

/// Negative log likelihood of fixed x under N(mu, diag(exp(log_var)));
/// mu and log_var are 1xK tape values, output is 1x1.
GradientTape::ValueId gaussian_nll_on_tape(GradientTape& tape,
                                           std::span<const double> x,
                                           GradientTape::ValueId mu,
                                           GradientTape::ValueId log_var);

/// Mean squared error between the 1xn tape value z and a fixed target.
GradientTape::ValueId mse_on_tape(GradientTape& tape, GradientTape::ValueId z,
                                  std::span<const double> target);

} // namespace ldvae
