#include <doctest.h>

#include <cmath>

#include "ldvae/distributions.hpp"
#include "ldvae/rng.hpp"
#include "helpers.hpp"

using namespace ldvae;

namespace {

constexpr double kEulerGamma = 0.57721566490153286060651209008;

// Adaptive Simpson quadrature; oracle for the full Dirichlet KL on n = 2,
// where the simplex reduces to the unit interval.
double simpson(const std::function<double(double)>& f, double a, double b,
               double fa, double fm, double fb, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, m, fa, flm, fm, tol / 2.0, depth - 1) +
         simpson(f, m, b, fm, frm, fb, tol / 2.0, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b) {
  const double m = 0.5 * (a + b);
  return simpson(f, a, b, f(a), f(m), f(b), 1e-12, 40);
}

} // namespace

TEST_CASE("log_gamma hits the analytic anchors") {
  CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(log_gamma(2.0) == doctest::Approx(0.0).epsilon(1e-12));
  // Gamma(1/2) = sqrt(pi).
  CHECK(log_gamma(0.5) ==
        doctest::Approx(0.57236494292470008707).epsilon(1e-12));
  // Reference value computed with 30-digit arithmetic.
  CHECK(log_gamma(10.3) ==
        doctest::Approx(13.4820367861383569706).epsilon(1e-12));
}

TEST_CASE("log_gamma agrees with the factorials") {
  double factorial = 1.0;
  for (int n = 1; n <= 15; ++n) {
    factorial *= n;
    CHECK(log_gamma(n + 1.0) ==
          doctest::Approx(std::log(factorial)).epsilon(1e-12));
  }
}

TEST_CASE("log_gamma stays accurate across the working range") {
  // Cross-checked against std::lgamma, an independent implementation.
  for (double x : {1e-3, 0.02, 0.37, 1.5, 4.2, 88.0, 1234.5, 1e4}) {
    CHECK(std::abs(log_gamma(x) - std::lgamma(x)) < 1e-10);
  }
}

TEST_CASE("log_gamma rejects non-positive input") {
  CHECK_THROWS_AS(log_gamma(0.0), DomainError);
  CHECK_THROWS_AS(log_gamma(-3.0), DomainError);
}

TEST_CASE("digamma hits the analytic anchors") {
  CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-10));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - kEulerGamma).epsilon(1e-10));
  // Reference value computed with 30-digit arithmetic.
  CHECK(digamma(7.7) == doctest::Approx(1.97488209491310181905).epsilon(1e-12));
}

TEST_CASE("digamma satisfies its recurrence") {
  for (double x = 0.01; x <= 100.0; x *= 1.7) {
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) < 1e-8);
  }
}

TEST_CASE("digamma rejects non-positive input") {
  CHECK_THROWS_AS(digamma(0.0), DomainError);
  CHECK_THROWS_AS(digamma(-1.0), DomainError);
}

TEST_CASE("trigamma matches pi^2/6 at 1 and differentiates digamma") {
  CHECK(trigamma(1.0) ==
        doctest::Approx(1.6449340668482264365).epsilon(1e-10));
  const double h = 1e-6;
  for (double x : {0.3, 1.1, 4.5, 20.0}) {
    const double numeric = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
    CHECK(trigamma(x) == doctest::Approx(numeric).epsilon(1e-5));
  }
}

TEST_CASE("inverse gamma cdf approximation follows the printed form") {
  SUBCASE("alpha=1, beta=1 is the identity in u") {
    CHECK(inverse_gamma_cdf_approx(0.5, 1.0, 1.0) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("frozen reference value") {
    // exp[(ln 0.3 + ln 0.5 + lnGamma(0.5)) / 0.5 - ln 2], 30-digit oracle.
    CHECK(inverse_gamma_cdf_approx(0.3, 0.5, 2.0) ==
          doctest::Approx(0.035342917352885173933).epsilon(1e-12));
  }
  SUBCASE("log-space evaluation matches direct evaluation via lgamma") {
    KeyedRng rng(11, {3});
    for (int trial = 0; trial < 200; ++trial) {
      const double u = rng.next_u01();
      const double alpha = 0.05 + 4.0 * rng.next_u01();
      const double beta = 0.1 + 3.0 * rng.next_u01();
      const double direct = std::exp(
          (std::log(u) + std::log(alpha) + std::lgamma(alpha)) / alpha -
          std::log(beta));
      CHECK(inverse_gamma_cdf_approx(u, alpha, beta) ==
            doctest::Approx(direct).epsilon(1e-10));
    }
  }
  SUBCASE("vanishes as u approaches zero") {
    double prev = inverse_gamma_cdf_approx(1e-2, 0.7, 1.0);
    for (double u = 1e-3; u > 1e-12; u /= 10.0) {
      const double cur = inverse_gamma_cdf_approx(u, 0.7, 1.0);
      CHECK(cur < prev);
      prev = cur;
    }
    CHECK(prev < 1e-8);
  }
  SUBCASE("strictly increasing in u") {
    KeyedRng rng(13, {4});
    for (int trial = 0; trial < 100; ++trial) {
      const double alpha = 0.05 + 5.0 * rng.next_u01();
      const double beta = 0.1 + 2.0 * rng.next_u01();
      double u1 = rng.next_u01();
      double u2 = rng.next_u01();
      if (u1 == u2) continue;
      if (u1 > u2) std::swap(u1, u2);
      CHECK(inverse_gamma_cdf_approx(u1, alpha, beta) <
            inverse_gamma_cdf_approx(u2, alpha, beta));
    }
  }
  SUBCASE("domain errors") {
    CHECK_THROWS_AS(inverse_gamma_cdf_approx(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(inverse_gamma_cdf_approx(1.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(inverse_gamma_cdf_approx(0.5, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(inverse_gamma_cdf_approx(0.5, 1.0, 0.0), DomainError);
  }
}

TEST_CASE("sample_dirichlet is symmetric under equal inputs") {
  const DirichletParams alpha({1.0, 1.0, 1.0});
  const std::vector<double> u = {0.5, 0.5, 0.5};
  const AbundanceVector z = sample_dirichlet(alpha, u);
  for (double v : z.z) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("sample_dirichlet matches per-component evaluation of the formula") {
  // alpha = (2, 5), u = (0.3, 0.7): g1 = sqrt(0.3 * 2 * Gamma(2)),
  // g2 = (0.7 * 5 * Gamma(5))^(1/5); 30-digit oracle values.
  const DirichletParams alpha({2.0, 5.0});
  const std::vector<double> u = {0.3, 0.7};
  const AbundanceVector z = sample_dirichlet(alpha, u);
  CHECK(z.z[0] == doctest::Approx(0.24203109152981428384).epsilon(1e-12));
  CHECK(z.z[1] == doctest::Approx(0.75796890847018571616).epsilon(1e-12));
}

TEST_CASE("sample_dirichlet always lands on the simplex") {
  KeyedRng rng(17, {5});
  for (int trial = 0; trial < 100000; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 5;
    std::vector<double> alpha(n);
    std::vector<double> u(n);
    for (std::size_t k = 0; k < n; ++k) {
      alpha[k] = 0.05 + 8.0 * rng.next_u01();
      u[k] = rng.next_u01();
    }
    const AbundanceVector z = sample_dirichlet(DirichletParams(alpha), u);
    CHECK(z.on_simplex(1e-6));
  }
}

TEST_CASE("sample_dirichlet validates its inputs") {
  CHECK_THROWS_AS(
      sample_dirichlet(DirichletParams({1.0, 1.0}), std::vector<double>{0.5}),
      ShapeError);
  DirichletParams bad;
  bad.alpha = {1.0, -1.0};
  CHECK_THROWS_AS(sample_dirichlet(bad, std::vector<double>{0.5, 0.5}),
                  DomainError);
}

TEST_CASE("dirichlet_kl_reduced vanishes when the arguments agree") {
  for (double a : {0.2, 1.0, 3.7, 42.0}) {
    const DirichletParams p = DirichletParams::symmetric(3, a);
    CHECK(std::abs(dirichlet_kl_reduced(p, p)) < 1e-10);
  }
}

TEST_CASE("dirichlet_kl_reduced hand-anchored values") {
  // (2,2) vs (1,1): 2 psi(2) = 2 (1 - gamma).
  CHECK(dirichlet_kl_reduced(DirichletParams({2.0, 2.0}),
                           DirichletParams({1.0, 1.0})) ==
        doctest::Approx(2.0 * (1.0 - kEulerGamma)).epsilon(1e-10));
  // (1,1) vs (2,2): 2 lnGamma(2) - 2 lnGamma(1) - 2 psi(1) = 2 gamma.
  CHECK(dirichlet_kl_reduced(DirichletParams({1.0, 1.0}),
                           DirichletParams({2.0, 2.0})) ==
        doctest::Approx(2.0 * kEulerGamma).epsilon(1e-10));
}

TEST_CASE("dirichlet_kl_full vanishes only at equality and is non-negative") {
  const DirichletParams p({2.0, 2.0});
  CHECK(std::abs(dirichlet_kl_full(p, p)) < 1e-10);

  KeyedRng rng(19, {6});
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 4;
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t k = 0; k < n; ++k) {
      a[k] = 0.05 + 10.0 * rng.next_u01();
      b[k] = 0.05 + 10.0 * rng.next_u01();
    }
    CHECK(dirichlet_kl_full(DirichletParams(a), DirichletParams(b)) >= -1e-10);
  }
}

TEST_CASE("dirichlet_kl_full matches simplex quadrature for n = 2") {
  // q = Beta(2,2) = 6 z (1-z), p = Beta(1,1) = 1; KL = int q ln(q/p).
  const double oracle = integrate(
      [](double z) {
        if (z <= 0.0 || z >= 1.0) return 0.0;
        const double q = 6.0 * z * (1.0 - z);
        return q * std::log(q);
      },
      0.0, 1.0);
  CHECK(dirichlet_kl_full(DirichletParams({2.0, 2.0}),
                          DirichletParams({1.0, 1.0})) ==
        doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("dirichlet_kl rejects mismatched lengths") {
  CHECK_THROWS_AS(dirichlet_kl_reduced(DirichletParams({1.0, 1.0, 1.0}),
                                     DirichletParams({1.0, 1.0})),
                  ShapeError);
}

TEST_CASE("kl gradients match finite differences in every mode") {
  KeyedRng rng(23, {7});
  const double h = 1e-6;
  for (KlMode mode : {KlMode::reduced, KlMode::reduced_stirling, KlMode::full}) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t n = 2 + rng.next_u64() % 3;
      std::vector<double> hat(n);
      std::vector<double> prior(n);
      for (std::size_t k = 0; k < n; ++k) {
        hat[k] = 0.2 + 5.0 * rng.next_u01();
        prior[k] = 0.2 + 5.0 * rng.next_u01();
      }
      const DirichletParams p(prior);
      const std::vector<double> grad =
          dirichlet_kl_grad(DirichletParams(hat), p, mode);
      for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> up = hat;
        std::vector<double> down = hat;
        up[k] += h;
        down[k] -= h;
        const double numeric = (dirichlet_kl(DirichletParams(up), p, mode) -
                                dirichlet_kl(DirichletParams(down), p, mode)) /
                               (2.0 * h);
        CHECK(test_helpers::close_rel(grad[k], numeric, 1e-4));
      }
    }
  }
}

TEST_CASE("diag gaussian log likelihood anchors") {
  SUBCASE("single band at the mean with unit variance") {
    const DiagGaussian g({0.7}, {0.0});
    CHECK(diag_gaussian_log_likelihood(std::vector<double>{0.7}, g) ==
          doctest::Approx(-0.91893853320467274178).epsilon(1e-12));
  }
  SUBCASE("frozen three-band reference") {
    // x = (0.2, -0.3, 0.7), mu = (0.1, 0, 0.5), log_var = (-0.5, 0.2, -1);
    // 30-digit oracle.
    const DiagGaussian g({0.1, 0.0, 0.5}, {-0.5, 0.2, -1.0});
    CHECK(diag_gaussian_log_likelihood(std::vector<double>{0.2, -0.3, 0.7},
                                       g) ==
          doctest::Approx(-2.2062677264252089544).epsilon(1e-12));
  }
  SUBCASE("maximized at mu = x for fixed variance") {
    const std::vector<double> x = {0.4, 0.6};
    const double at_mean =
        diag_gaussian_log_likelihood(x, DiagGaussian({0.4, 0.6}, {0.1, 0.1}));
    KeyedRng rng(29, {8});
    for (int trial = 0; trial < 50; ++trial) {
      const DiagGaussian g(
          {0.4 + rng.next_normal() * 0.2, 0.6 + rng.next_normal() * 0.2},
          {0.1, 0.1});
      CHECK(diag_gaussian_log_likelihood(x, g) <= at_mean + 1e-12);
    }
  }
  SUBCASE("length mismatch") {
    const DiagGaussian g({0.0}, {0.0});
    CHECK_THROWS_AS(
        diag_gaussian_log_likelihood(std::vector<double>{1.0, 2.0}, g),
        ShapeError);
  }
}

TEST_CASE("diag gaussian clamps log variance on construction") {
  const DiagGaussian g({0.0, 0.0}, {-40.0, 40.0});
  CHECK(g.log_var[0] == kLogVarMin);
  CHECK(g.log_var[1] == kLogVarMax);
}

TEST_CASE("sample_dirichlet tape gradients match finite differences") {
  KeyedRng rng(31, {9});
  const double h = 1e-5;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + rng.next_u64() % 3;
    std::vector<double> alpha(n);
    std::vector<double> u(n);
    std::vector<double> weight(n);
    for (std::size_t k = 0; k < n; ++k) {
      alpha[k] = 0.3 + 4.0 * rng.next_u01();
      u[k] = 0.05 + 0.9 * rng.next_u01();
      weight[k] = rng.next_normal();
    }

    // Scalar probe: sum_k weight_k z_k.
    const auto eval = [&](const std::vector<double>& a) {
      const AbundanceVector z = sample_dirichlet(DirichletParams(a), u);
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) acc += weight[k] * z.z[k];
      return acc;
    };

    GradientTape tape;
    const auto alpha_id = tape.parameter(Tensor2::row(alpha));
    const auto z_id = sample_dirichlet_on_tape(tape, alpha_id, u);
    const auto probe =
        tape.sum(tape.mul(z_id, tape.constant(Tensor2::row(weight))));
    const std::vector<Tensor2> grads = tape.backward(probe);

    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> up = alpha;
      std::vector<double> down = alpha;
      up[k] += h;
      down[k] -= h;
      const double numeric = (eval(up) - eval(down)) / (2.0 * h);
      CHECK(test_helpers::close_rel(grads[0][k], numeric, 1e-4));
    }
  }
}

TEST_CASE("gaussian nll tape op agrees with the likelihood and its slope") {
  const std::vector<double> x = {0.2, -0.1, 0.4};
  std::vector<double> mu = {0.15, 0.0, 0.3};
  std::vector<double> lv = {-0.2, 0.3, -1.0};

  GradientTape tape;
  const auto mu_id = tape.parameter(Tensor2::row(mu));
  const auto lv_id = tape.parameter(Tensor2::row(lv));
  const auto nll = gaussian_nll_on_tape(tape, x, mu_id, lv_id);
  CHECK(tape.value(nll)[0] ==
        doctest::Approx(-diag_gaussian_log_likelihood(x, DiagGaussian(mu, lv)))
            .epsilon(1e-12));

  const std::vector<Tensor2> grads = tape.backward(nll);
  const double h = 1e-6;
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::vector<double> up = mu;
    std::vector<double> down = mu;
    up[k] += h;
    down[k] -= h;
    const double numeric =
        (-diag_gaussian_log_likelihood(x, DiagGaussian(up, lv)) +
         diag_gaussian_log_likelihood(x, DiagGaussian(down, lv))) /
        (2.0 * h);
    CHECK(test_helpers::close_rel(grads[0][k], numeric, 1e-4));
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    std::vector<double> up = lv;
    std::vector<double> down = lv;
    up[k] += h;
    down[k] -= h;
    const double numeric =
        (-diag_gaussian_log_likelihood(x, DiagGaussian(mu, up)) +
         diag_gaussian_log_likelihood(x, DiagGaussian(mu, down))) /
        (2.0 * h);
    CHECK(test_helpers::close_rel(grads[1][k], numeric, 1e-4));
  }
}
