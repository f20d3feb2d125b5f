#pragma once

#include <span>
#include <vector>

#include "ldvae/data.hpp"

namespace ldvae {

/// Sample statistics in the mean/std/min/25%/50%/75%/max layout. Quantiles
/// interpolate linearly between order statistics; std is the sample
/// standard deviation (0 for a single value).
struct MetricSummary {
  double mean = 0.0;
  double std_dev = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};

/// Bijection extracted index -> reference index minimizing total SAD.
struct MatchResult {
  std::vector<std::size_t> permutation;
  std::vector<double> per_pair_sad; // indexed by extracted index
  double total_sad = 0.0;
  double mean_sad() const;
};

/// Spectral angle in radians: arccos of the cosine similarity, with the
/// ratio clamped to [-1, 1] before arccos.
double sad(std::span<const double> a, std::span<const double> b);

/// sqrt of the mean squared difference over all pixels and components.
/// Both sequences are pixel-major with `components` values per pixel.
double rmse(std::span<const double> z_true, std::span<const double> z_est,
            std::size_t components);

/// Per-class variant: averages over pixels for one fixed component.
double rmse_component(std::span<const double> z_true,
                      std::span<const double> z_est, std::size_t components,
                      std::size_t component);

/// Mean over pixels of the mean squared per-band difference.
double mse(std::span<const double> x, std::span<const double> x_hat,
           std::size_t bands);

/// Optimal assignment over the n x n SAD matrix: exhaustive search for
/// n <= 8, augmenting-path assignment above.
MatchResult match_endmembers(const EndmemberSet& extracted,
                             const EndmemberSet& reference);

/// Assignment minimizing total cost of a square matrix (row-major);
/// returns the column chosen for each row. Exposed for the matcher and its
/// tests.
std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n);

MetricSummary summarize(std::span<const double> values);

} // namespace ldvae
