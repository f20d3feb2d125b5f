#include "ldvae/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ldvae {

namespace {

constexpr double kLn2Pi = 1.8378770664093454835606594728112;
constexpr double kHalfLn2Pi = 0.5 * kLn2Pi;

// Lanczos g=7, n=9 coefficient set.
constexpr double kLanczos[9] = {
    0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
    771.32342877765313,       -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,     9.9843695780195716e-6, 1.5056327351493116e-7,
};

double log_gamma_lanczos(double x) {
  // Valid for x >= 0.5.
  double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (x - 1.0 + i);
  const double t = x + 6.5;
  return kHalfLn2Pi + (x - 0.5) * std::log(t) - t + std::log(acc);
}

void check_positive(double x, const char* fn) {
  if (!(x > 0.0) || !std::isfinite(x))
    throw DomainError(std::string(fn) + ": argument must be positive and finite");
}

void check_equal_length(const DirichletParams& a, const DirichletParams& b) {
  if (a.size() != b.size())
    throw ShapeError("dirichlet_kl: concentration lengths disagree");
}

} // namespace

double log_gamma(double x) {
  check_positive(x, "log_gamma");
  if (x < 0.5) {
    // Reflection keeps the Lanczos argument away from zero.
    constexpr double pi = 3.1415926535897932384626433832795;
    return std::log(pi / std::sin(pi * x)) - log_gamma_lanczos(1.0 - x);
  }
  return log_gamma_lanczos(x);
}

double digamma(double x) {
  check_positive(x, "digamma");
  double result = 0.0;
  // psi(x) = psi(x+1) - 1/x, shift until the asymptotic series is sharp.
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_2k / (2k x^2k)
  double series = -inv2 * (1.0 / 12.0 -
                  inv2 * (1.0 / 120.0 -
                  inv2 * (1.0 / 252.0 -
                  inv2 * (1.0 / 240.0 -
                  inv2 * (1.0 / 132.0)))));
  return result + std::log(x) - 0.5 * inv + series;
}

double trigamma(double x) {
  check_positive(x, "trigamma");
  double result = 0.0;
  while (x < 10.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  double series = 1.0 +
                  inv * (0.5 +
                  inv * (1.0 / 6.0 +
                  inv2 * (-1.0 / 30.0 +
                  inv2 * (1.0 / 42.0 +
                  inv2 * (-1.0 / 30.0)))));
  return result + inv * series;
}

DirichletParams::DirichletParams(std::vector<double> a) : alpha(std::move(a)) {
  validate();
}

DirichletParams DirichletParams::symmetric(std::size_t n, double value) {
  return DirichletParams(std::vector<double>(n, value));
}

double DirichletParams::sum() const {
  return std::accumulate(alpha.begin(), alpha.end(), 0.0);
}

void DirichletParams::validate() const {
  if (alpha.size() < 2)
    throw DomainError("DirichletParams: need at least 2 components");
  for (double a : alpha)
    if (!(a > 0.0) || !std::isfinite(a))
      throw DomainError("DirichletParams: components must be positive finite");
}

AbundanceVector AbundanceVector::one_hot(std::size_t n, std::size_t index) {
  if (index >= n) throw DomainError("one_hot: index out of range");
  std::vector<double> z(n, 0.0);
  z[index] = 1.0;
  return AbundanceVector(std::move(z));
}

bool AbundanceVector::on_simplex(double tolerance) const {
  double total = 0.0;
  for (double v : z) {
    if (v < -tolerance) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= tolerance;
}

DiagGaussian::DiagGaussian(std::vector<double> mean,
                           std::vector<double> log_variance)
    : mu(std::move(mean)), log_var(std::move(log_variance)) {
  if (mu.size() != log_var.size())
    throw ShapeError("DiagGaussian: mu/log_var lengths disagree");
  for (double& lv : log_var) lv = std::clamp(lv, kLogVarMin, kLogVarMax);
}

double inverse_gamma_cdf_approx(double u, double alpha, double beta) {
  if (!(u > 0.0) || !(u < 1.0))
    throw DomainError("inverse_gamma_cdf_approx: u must lie in (0,1)");
  check_positive(alpha, "inverse_gamma_cdf_approx");
  check_positive(beta, "inverse_gamma_cdf_approx");
  const double log_value =
      (std::log(u) + std::log(alpha) + log_gamma(alpha)) / alpha -
      std::log(beta);
  return std::exp(log_value);
}

namespace {

// Log of the unnormalized per-component draw at beta = 1.
double sample_log_term(double u, double alpha) {
  return (std::log(u) + std::log(alpha) + log_gamma(alpha)) / alpha;
}

std::vector<double> clamp_uniforms(std::span<const double> uniforms) {
  std::vector<double> u(uniforms.begin(), uniforms.end());
  for (double& v : u) v = std::clamp(v, kUniformClampLo, kUniformClampHi);
  return u;
}

// Normalized draw plus the log terms needed for the alpha gradient.
struct DirichletDraw {
  std::vector<double> log_terms;
  std::vector<double> z;
};

DirichletDraw dirichlet_draw(const DirichletParams& params,
                             std::span<const double> uniforms) {
  params.validate();
  const std::size_t n = params.size();
  if (uniforms.size() != n)
    throw ShapeError("sample_dirichlet: need one uniform per component");

  const std::vector<double> u = clamp_uniforms(uniforms);
  DirichletDraw draw;
  draw.log_terms.resize(n);
  double log_max = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    const double lt = sample_log_term(u[k], params.alpha[k]);
    if (!std::isfinite(lt))
      throw DomainError("sample_dirichlet: non-finite log draw");
    draw.log_terms[k] = lt;
    log_max = std::max(log_max, lt);
  }
  // All unnormalized draws below the smallest normal double.
  if (log_max < std::log(std::numeric_limits<double>::min()))
    throw DegenerateSampleError("sample_dirichlet: all draws underflowed");

  draw.z.resize(n);
  double total = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    draw.z[k] = std::exp(draw.log_terms[k] - log_max);
    total += draw.z[k];
  }
  for (double& zk : draw.z) zk /= total;
  return draw;
}

} // namespace

AbundanceVector sample_dirichlet(const DirichletParams& params,
                                 std::span<const double> uniforms) {
  return AbundanceVector(dirichlet_draw(params, uniforms).z);
}

const char* kl_mode_name(KlMode mode) {
  switch (mode) {
    case KlMode::reduced: return "reduced";
    case KlMode::reduced_stirling: return "reduced_stirling";
    case KlMode::full: return "full";
  }
  return "reduced";
}

KlMode kl_mode_from_name(const std::string& name) {
  if (name == "reduced") return KlMode::reduced;
  if (name == "reduced_stirling") return KlMode::reduced_stirling;
  if (name == "full") return KlMode::full;
  throw DomainError("unknown kl mode: " + name);
}

double dirichlet_kl_reduced(const DirichletParams& alpha_hat,
                          const DirichletParams& alpha_prior) {
  return dirichlet_kl(alpha_hat, alpha_prior, KlMode::reduced);
}

double dirichlet_kl_full(const DirichletParams& alpha_hat,
                         const DirichletParams& alpha_prior) {
  return dirichlet_kl(alpha_hat, alpha_prior, KlMode::full);
}

double dirichlet_kl(const DirichletParams& alpha_hat,
                    const DirichletParams& alpha_prior, KlMode mode) {
  check_equal_length(alpha_hat, alpha_prior);
  alpha_hat.validate();
  alpha_prior.validate();

  double result = 0.0;
  for (std::size_t k = 0; k < alpha_hat.size(); ++k) {
    const double ah = alpha_hat.alpha[k];
    const double ap = alpha_prior.alpha[k];
    result += log_gamma(ap) - log_gamma(ah);
    switch (mode) {
      case KlMode::reduced:
      case KlMode::full:
        result += (ah - ap) * digamma(ah);
        break;
      case KlMode::reduced_stirling:
        result += (ah - ap) * (std::log(ah) - 0.5 / ah);
        break;
    }
  }
  if (mode == KlMode::full) {
    const double sum_hat = alpha_hat.sum();
    const double sum_prior = alpha_prior.sum();
    result += log_gamma(sum_hat) - log_gamma(sum_prior);
    result -= digamma(sum_hat) * (sum_hat - sum_prior);
  }
  return result;
}

std::vector<double> dirichlet_kl_grad(const DirichletParams& alpha_hat,
                                      const DirichletParams& alpha_prior,
                                      KlMode mode) {
  check_equal_length(alpha_hat, alpha_prior);
  const std::size_t n = alpha_hat.size();
  std::vector<double> grad(n);

  double diff_sum = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    diff_sum += alpha_hat.alpha[k] - alpha_prior.alpha[k];

  for (std::size_t k = 0; k < n; ++k) {
    const double ah = alpha_hat.alpha[k];
    const double ap = alpha_prior.alpha[k];
    switch (mode) {
      case KlMode::reduced:
        grad[k] = (ah - ap) * trigamma(ah);
        break;
      case KlMode::reduced_stirling:
        grad[k] = -digamma(ah) + (std::log(ah) - 0.5 / ah) +
                  (ah - ap) * (1.0 / ah + 0.5 / (ah * ah));
        break;
      case KlMode::full: {
        const double sum_hat = alpha_hat.sum();
        grad[k] = (ah - ap) * trigamma(ah) - trigamma(sum_hat) * diff_sum;
        break;
      }
    }
  }
  return grad;
}

double diag_gaussian_log_likelihood(std::span<const double> x,
                                    const DiagGaussian& g) {
  if (x.size() != g.size())
    throw ShapeError("diag_gaussian_log_likelihood: length mismatch");
  double result = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - g.mu[k];
    result += -kHalfLn2Pi - 0.5 * g.log_var[k] -
              diff * diff / (2.0 * std::exp(g.log_var[k]));
  }
  return result;
}

GradientTape::ValueId sample_dirichlet_on_tape(GradientTape& tape,
                                               GradientTape::ValueId alpha,
                                               std::span<const double> uniforms) {
  const Tensor2& a = tape.value(alpha);
  if (a.rows() != 1)
    throw ShapeError("sample_dirichlet_on_tape: alpha must be a row vector");
  DirichletParams params(std::vector<double>(a.data()));
  DirichletDraw draw = dirichlet_draw(params, uniforms);

  Tensor2 out = Tensor2::row(draw.z);
  auto backward = [alpha, draw = std::move(draw)](const Tensor2& g,
                                                  GradientTape& t) {
    const Tensor2& a = t.value(alpha);
    const std::size_t n = a.cols();
    // z = softmax(log terms): dz_k/dL_j = z_k (delta_kj - z_j).
    double weighted = 0.0;
    for (std::size_t k = 0; k < n; ++k) weighted += g[k] * draw.z[k];
    Tensor2 da(1, n);
    for (std::size_t j = 0; j < n; ++j) {
      const double dL = draw.z[j] * (g[j] - weighted);
      const double aj = a[j];
      // dL_j/da_j, with L_j = (ln u_j + ln a_j + lnG(a_j)) / a_j.
      const double dL_da = (1.0 / aj + digamma(aj) - draw.log_terms[j]) / aj;
      da[j] = dL * dL_da;
    }
    t.accumulate_grad(alpha, da);
  };
  return tape.custom(std::move(out), std::move(backward));
}

GradientTape::ValueId dirichlet_kl_on_tape(GradientTape& tape,
                                           GradientTape::ValueId alpha_hat,
                                           const DirichletParams& prior,
                                           KlMode mode) {
  const Tensor2& a = tape.value(alpha_hat);
  if (a.rows() != 1)
    throw ShapeError("dirichlet_kl_on_tape: alpha_hat must be a row vector");
  DirichletParams hat(std::vector<double>(a.data()));
  Tensor2 out(1, 1, {dirichlet_kl(hat, prior, mode)});

  auto backward = [alpha_hat, prior, mode](const Tensor2& g, GradientTape& t) {
    const Tensor2& a = t.value(alpha_hat);
    DirichletParams hat(std::vector<double>(a.data()));
    std::vector<double> grad = dirichlet_kl_grad(hat, prior, mode);
    Tensor2 da(1, grad.size());
    for (std::size_t k = 0; k < grad.size(); ++k) da[k] = g[0] * grad[k];
    t.accumulate_grad(alpha_hat, da);
  };
  return tape.custom(std::move(out), std::move(backward));
}

GradientTape::ValueId gaussian_nll_on_tape(GradientTape& tape,
                                           std::span<const double> x,
                                           GradientTape::ValueId mu,
                                           GradientTape::ValueId log_var) {
  const Tensor2& m = tape.value(mu);
  const Tensor2& lv = tape.value(log_var);
  if (m.rows() != 1 || lv.rows() != 1 || m.cols() != lv.cols() ||
      m.cols() != x.size())
    throw ShapeError("gaussian_nll_on_tape: shape mismatch");

  double nll = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double diff = x[k] - m[k];
    nll += kHalfLn2Pi + 0.5 * lv[k] + diff * diff / (2.0 * std::exp(lv[k]));
  }
  Tensor2 out(1, 1, {nll});

  std::vector<double> x_copy(x.begin(), x.end());
  auto backward = [mu, log_var, x_copy = std::move(x_copy)](const Tensor2& g,
                                                            GradientTape& t) {
    const Tensor2& m = t.value(mu);
    const Tensor2& lv = t.value(log_var);
    const std::size_t k_count = m.cols();
    Tensor2 dmu(1, k_count);
    Tensor2 dlv(1, k_count);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double diff = x_copy[k] - m[k];
      const double inv_var = std::exp(-lv[k]);
      dmu[k] = g[0] * (-diff * inv_var);
      dlv[k] = g[0] * (0.5 - 0.5 * diff * diff * inv_var);
    }
    t.accumulate_grad(mu, dmu);
    t.accumulate_grad(log_var, dlv);
  };
  return tape.custom(std::move(out), std::move(backward));
}

GradientTape::ValueId mse_on_tape(GradientTape& tape, GradientTape::ValueId z,
                                  std::span<const double> target) {
  const Tensor2& v = tape.value(z);
  if (v.rows() != 1 || v.cols() != target.size())
    throw ShapeError("mse_on_tape: shape mismatch");
  const std::size_t n = target.size();
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double diff = v[k] - target[k];
    acc += diff * diff;
  }
  Tensor2 out(1, 1, {acc / static_cast<double>(n)});

  std::vector<double> t_copy(target.begin(), target.end());
  auto backward = [z, t_copy = std::move(t_copy)](const Tensor2& g,
                                                  GradientTape& t) {
    const Tensor2& v = t.value(z);
    const std::size_t n = v.cols();
    Tensor2 dz(1, n);
    for (std::size_t k = 0; k < n; ++k)
      dz[k] = g[0] * 2.0 * (v[k] - t_copy[k]) / static_cast<double>(n);
    t.accumulate_grad(z, dz);
  };
  return tape.custom(std::move(out), std::move(backward));
}

} // namespace ldvae
