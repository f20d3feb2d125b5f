#include "ldvae/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ldvae {

double MatchResult::mean_sad() const {
  if (per_pair_sad.empty()) return 0.0;
  return std::accumulate(per_pair_sad.begin(), per_pair_sad.end(), 0.0) /
         static_cast<double>(per_pair_sad.size());
}

double sad(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("sad: length mismatch");
  if (a.empty()) throw ShapeError("sad: empty spectra");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0)
    throw DomainError("sad: zero-norm spectrum");
  const double ratio = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(ratio);
}

namespace {

void check_sequences(std::span<const double> a, std::span<const double> b,
                     std::size_t stride, const char* fn) {
  if (a.size() != b.size())
    throw ShapeError(std::string(fn) + ": sequence sizes disagree");
  if (stride == 0 || a.size() % stride != 0)
    throw ShapeError(std::string(fn) + ": size is not a multiple of the stride");
  if (a.empty()) throw ShapeError(std::string(fn) + ": empty input");
}

} // namespace

double rmse(std::span<const double> z_true, std::span<const double> z_est,
            std::size_t components) {
  check_sequences(z_true, z_est, components, "rmse");
  double acc = 0.0;
  for (std::size_t i = 0; i < z_true.size(); ++i) {
    const double d = z_true[i] - z_est[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(z_true.size()));
}

double rmse_component(std::span<const double> z_true,
                      std::span<const double> z_est, std::size_t components,
                      std::size_t component) {
  check_sequences(z_true, z_est, components, "rmse_component");
  if (component >= components)
    throw ShapeError("rmse_component: component index out of range");
  const std::size_t pixels = z_true.size() / components;
  double acc = 0.0;
  for (std::size_t p = 0; p < pixels; ++p) {
    const double d =
        z_true[p * components + component] - z_est[p * components + component];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(pixels));
}

double mse(std::span<const double> x, std::span<const double> x_hat,
           std::size_t bands) {
  check_sequences(x, x_hat, bands, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - x_hat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

namespace {

std::vector<std::size_t> assignment_exhaustive(std::span<const double> cost,
                                               std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    if (total < best_cost) {
      best_cost = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Shortest-augmenting-path assignment with potentials, O(n^3).
std::vector<std::size_t> assignment_augmenting(std::span<const double> cost,
                                               std::size_t n) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> matched_row(n + 1, 0); // per column, 1-based rows
  std::vector<std::size_t> way(n + 1, 0);

  for (std::size_t i = 1; i <= n; ++i) {
    matched_row[0] = i;
    std::size_t j0 = 0;
    std::vector<double> min_reduced(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const std::size_t i0 = matched_row[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double reduced = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (reduced < min_reduced[j]) {
          min_reduced[j] = reduced;
          way[j] = j0;
        }
        if (min_reduced[j] < delta) {
          delta = min_reduced[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[matched_row[j]] += delta;
          v[j] -= delta;
        } else {
          min_reduced[j] -= delta;
        }
      }
      j0 = j1;
    } while (matched_row[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      matched_row[j0] = matched_row[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> result(n);
  for (std::size_t j = 1; j <= n; ++j)
    if (matched_row[j] != 0) result[matched_row[j] - 1] = j - 1;
  return result;
}

} // namespace

std::vector<std::size_t> solve_assignment(std::span<const double> cost,
                                          std::size_t n) {
  if (cost.size() != n * n)
    throw ShapeError("solve_assignment: cost matrix is not n x n");
  if (n == 0) throw ShapeError("solve_assignment: empty matrix");
  if (n <= 8) return assignment_exhaustive(cost, n);
  return assignment_augmenting(cost, n);
}

MatchResult match_endmembers(const EndmemberSet& extracted,
                             const EndmemberSet& reference) {
  extracted.validate();
  reference.validate();
  const std::size_t n = extracted.count();
  if (n != reference.count())
    throw ShapeError("match_endmembers: endmember counts disagree");
  if (extracted.bands() != reference.bands())
    throw ShapeError("match_endmembers: band counts disagree");

  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      cost[i * n + j] = sad(extracted.spectra[i].values, reference.spectra[j].values);

  MatchResult result;
  result.permutation = solve_assignment(cost, n);
  result.per_pair_sad.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    result.per_pair_sad[i] = cost[i * n + result.permutation[i]];
    result.total_sad += result.per_pair_sad[i];
  }
  return result;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw DomainError("summarize: empty input");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  const auto quantile = [&](double p) {
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
  };

  MetricSummary s;
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
           static_cast<double>(n);
  if (n > 1) {
    double acc = 0.0;
    for (double v : sorted) acc += (v - s.mean) * (v - s.mean);
    s.std_dev = std::sqrt(acc / static_cast<double>(n - 1));
  }
  s.min = sorted.front();
  s.q25 = quantile(0.25);
  s.q50 = quantile(0.50);
  s.q75 = quantile(0.75);
  s.max = sorted.back();
  return s;
}

} // namespace ldvae
