#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ldvae/metrics.hpp"
#include "ldvae/rng.hpp"

using namespace ldvae;

namespace {

EndmemberSet named_set(const std::vector<std::vector<double>>& spectra) {
  EndmemberSet set;
  for (std::size_t j = 0; j < spectra.size(); ++j) {
    set.names.push_back("s" + std::to_string(j));
    Spectrum s;
    s.values = spectra[j];
    set.spectra.push_back(std::move(s));
  }
  return set;
}

// Exhaustive assignment oracle, independent of solve_assignment.
double best_assignment_cost(const std::vector<double>& cost, std::size_t n) {
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += cost[i * n + perm[i]];
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

} // namespace

TEST_CASE("sad analytic anchors") {
  const std::vector<double> x = {0.3, 0.8, 0.1};
  CHECK(sad(x, x) == 0.0);
  CHECK(sad(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}) ==
        doctest::Approx(M_PI / 2.0).epsilon(1e-12));
  CHECK(sad(std::vector<double>{1.0, 1.0}, std::vector<double>{1.0, 0.0}) ==
        doctest::Approx(M_PI / 4.0).epsilon(1e-12));
}

TEST_CASE("sad is scale invariant, symmetric, and bounded") {
  KeyedRng rng(201, {1});
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(6), b(6);
    for (std::size_t i = 0; i < 6; ++i) {
      a[i] = rng.next_normal();
      b[i] = rng.next_normal();
    }
    if (std::all_of(a.begin(), a.end(), [](double v) { return v == 0.0; }))
      continue;
    const double angle = sad(a, b);
    CHECK(angle >= 0.0);
    CHECK(angle <= M_PI);
    CHECK(sad(b, a) == angle);

    std::vector<double> scaled = a;
    const double c = 0.1 + 5.0 * rng.next_u01();
    for (double& v : scaled) v *= c;
    CHECK(sad(a, scaled) == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("sad rejects degenerate input") {
  CHECK_THROWS_AS(sad(std::vector<double>{0.0, 0.0},
                      std::vector<double>{1.0, 0.0}),
                  DomainError);
  CHECK_THROWS_AS(sad(std::vector<double>{1.0},
                      std::vector<double>{1.0, 2.0}),
                  ShapeError);
}

TEST_CASE("rmse anchors and oracle") {
  SUBCASE("identical sequences vanish") {
    const std::vector<double> z = {0.2, 0.8, 0.5, 0.5};
    CHECK(rmse(z, z, 2) == 0.0);
  }
  SUBCASE("single swapped pixel") {
    CHECK(rmse(std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0},
               2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("random sequences match a direct recomputation") {
    KeyedRng rng(203, {2});
    const std::size_t pixels = 100;
    const std::size_t comps = 3;
    std::vector<double> zt(pixels * comps), ze(pixels * comps);
    for (std::size_t i = 0; i < zt.size(); ++i) {
      zt[i] = rng.next_u01();
      ze[i] = rng.next_u01();
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < zt.size(); ++i)
      acc += (zt[i] - ze[i]) * (zt[i] - ze[i]);
    CHECK(rmse(zt, ze, comps) ==
          doctest::Approx(std::sqrt(acc / zt.size())).epsilon(1e-12));
    // Per-component variant.
    for (std::size_t c = 0; c < comps; ++c) {
      double comp_acc = 0.0;
      for (std::size_t p = 0; p < pixels; ++p) {
        const double d = zt[p * comps + c] - ze[p * comps + c];
        comp_acc += d * d;
      }
      CHECK(rmse_component(zt, ze, comps, c) ==
            doctest::Approx(std::sqrt(comp_acc / pixels)).epsilon(1e-12));
    }
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(rmse(std::vector<double>{1.0, 2.0},
                         std::vector<double>{1.0}, 1),
                    ShapeError);
    CHECK_THROWS_AS(rmse(std::vector<double>{1.0, 2.0, 3.0},
                         std::vector<double>{1.0, 2.0, 3.0}, 2),
                    ShapeError);
  }
}

TEST_CASE("mse anchors and oracle") {
  CHECK(mse(std::vector<double>{0.0, 0.0}, std::vector<double>{1.0, 1.0}, 2) ==
        doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<double> x = {0.1, 0.2, 0.3, 0.4};
  CHECK(mse(x, x, 2) == 0.0);

  KeyedRng rng(207, {3});
  std::vector<double> a(60), b(60);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = rng.next_u01();
    b[i] = rng.next_u01();
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    acc += (a[i] - b[i]) * (a[i] - b[i]);
  CHECK(mse(a, b, 6) == doctest::Approx(acc / a.size()).epsilon(1e-12));
}

TEST_CASE("match_endmembers recovers identity and shuffles") {
  const std::vector<std::vector<double>> base = {
      {0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.1, 0.1, 0.9}, {0.5, 0.5, 0.1}};
  const EndmemberSet reference = named_set(base);

  SUBCASE("identity") {
    const MatchResult m = match_endmembers(reference, reference);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(m.permutation[i] == i);
      CHECK(m.per_pair_sad[i] == 0.0);
    }
    CHECK(m.total_sad == 0.0);
  }
  SUBCASE("known shuffle") {
    const std::vector<std::size_t> shuffle = {2, 0, 3, 1};
    std::vector<std::vector<double>> moved(4);
    for (std::size_t i = 0; i < 4; ++i) moved[i] = base[shuffle[i]];
    const MatchResult m = match_endmembers(named_set(moved), reference);
    for (std::size_t i = 0; i < 4; ++i) CHECK(m.permutation[i] == shuffle[i]);
    CHECK(m.total_sad == doctest::Approx(0.0));
  }
  SUBCASE("count mismatch") {
    const EndmemberSet small = named_set({base[0], base[1]});
    CHECK_THROWS_AS(match_endmembers(small, reference), ShapeError);
  }
}

TEST_CASE("assignment cost matches exhaustive enumeration on random 4x4") {
  KeyedRng rng(211, {4});
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> cost(16);
    for (double& c : cost) c = rng.next_u01() * 3.0;
    const std::vector<std::size_t> chosen = solve_assignment(cost, 4);
    double total = 0.0;
    std::vector<bool> used(4, false);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(!used[chosen[i]]);
      used[chosen[i]] = true;
      total += cost[i * 4 + chosen[i]];
    }
    CHECK(total == doctest::Approx(best_assignment_cost(cost, 4)).epsilon(1e-12));
  }
}

TEST_CASE("augmenting-path assignment agrees with brute force at n = 9") {
  // n = 9 exercises the non-exhaustive path; the oracle enumerates 9!.
  KeyedRng rng(213, {5});
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> cost(81);
    for (double& c : cost) c = rng.next_u01();
    const std::vector<std::size_t> chosen = solve_assignment(cost, 9);
    double total = 0.0;
    std::vector<bool> used(9, false);
    for (std::size_t i = 0; i < 9; ++i) {
      CHECK(!used[chosen[i]]);
      used[chosen[i]] = true;
      total += cost[i * 9 + chosen[i]];
    }
    CHECK(total == doctest::Approx(best_assignment_cost(cost, 9)).epsilon(1e-12));
  }
}

TEST_CASE("optimal matching never loses to the identity assignment") {
  KeyedRng rng(217, {6});
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> a(5), b(5);
    for (std::size_t j = 0; j < 5; ++j) {
      a[j].resize(8);
      b[j].resize(8);
      for (std::size_t k = 0; k < 8; ++k) {
        a[j][k] = 0.05 + rng.next_u01();
        b[j][k] = 0.05 + rng.next_u01();
      }
    }
    const EndmemberSet ea = named_set(a);
    const EndmemberSet eb = named_set(b);
    const MatchResult m = match_endmembers(ea, eb);
    double identity_cost = 0.0;
    for (std::size_t j = 0; j < 5; ++j)
      identity_cost += sad(a[j], b[j]);
    CHECK(m.total_sad <= identity_cost + 1e-12);
  }
}

TEST_CASE("summarize statistics") {
  SUBCASE("constant sequence") {
    const std::vector<double> v(7, 3.25);
    const MetricSummary s = summarize(v);
    CHECK(s.mean == 3.25);
    CHECK(s.std_dev == 0.0);
    CHECK(s.min == 3.25);
    CHECK(s.q25 == 3.25);
    CHECK(s.q50 == 3.25);
    CHECK(s.q75 == 3.25);
    CHECK(s.max == 3.25);
  }
  SUBCASE("interpolated median of four") {
    const MetricSummary s = summarize(std::vector<double>{4.0, 1.0, 3.0, 2.0});
    CHECK(s.q50 == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(s.q25 == doctest::Approx(1.75).epsilon(1e-12));
    CHECK(s.q75 == doctest::Approx(3.25).epsilon(1e-12));
  }
  SUBCASE("single element") {
    const MetricSummary s = summarize(std::vector<double>{42.0});
    CHECK(s.std_dev == 0.0);
    CHECK(s.q50 == 42.0);
  }
  SUBCASE("random sample against a sorted-array recomputation") {
    KeyedRng rng(219, {7});
    std::vector<double> v(1000);
    for (double& x : v) x = rng.next_normal();
    const MetricSummary s = summarize(v);

    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double mean =
        std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size() - 1);
    const auto quantile = [&](double p) {
      const double h = p * static_cast<double>(sorted.size() - 1);
      const std::size_t lo = static_cast<std::size_t>(h);
      return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
    };
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.std_dev == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(s.min == sorted.front());
    CHECK(s.max == sorted.back());
    CHECK(s.q25 == doctest::Approx(quantile(0.25)).epsilon(1e-12));
    CHECK(s.q50 == doctest::Approx(quantile(0.50)).epsilon(1e-12));
    CHECK(s.q75 == doctest::Approx(quantile(0.75)).epsilon(1e-12));
    CHECK(s.min <= s.q25);
    CHECK(s.q25 <= s.q50);
    CHECK(s.q50 <= s.q75);
    CHECK(s.q75 <= s.max);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(summarize(std::vector<double>{}), DomainError);
  }
}
