#include "ldvae/rng.hpp"

#include <cmath>

namespace ldvae {

double KeyedRng::next_normal() {
  const double u1 = next_u01();
  const double u2 = next_u01();
  constexpr double two_pi = 6.283185307179586476925286766559;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

double KeyedRng::next_gamma(double shape) {
  if (shape < 1.0) {
    // Boost to shape+1, then scale by U^(1/shape).
    const double g = next_gamma(shape + 1.0);
    return g * std::pow(next_u01(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = next_u01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

} // namespace ldvae
