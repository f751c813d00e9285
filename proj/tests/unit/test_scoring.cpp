// Copyright 2026 The CLOVER-HTS Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "clover/error.hpp"
#include "clover/scoring.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace clover;

namespace {

constexpr double kStdNormalCrps = 0.233695;

double inverse_normal_cdf(double p) {
  // Bisection on erfc; plenty for a test oracle.
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::vector<double> normal_draws(std::size_t n, std::mt19937_64& rng, double mu = 0.0,
                                 double sigma = 1.0) {
  std::normal_distribution<double> normal(mu, sigma);
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

std::vector<double> uniform_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = static_cast<double>(i + 1) / static_cast<double>(n + 1);
  return g;
}

}  // namespace

TEST_CASE("crps_empirical simple cases") {
  const std::vector<double> c(5, 2.0);
  CHECK(crps_empirical(3.5, c) == doctest::Approx(1.5).epsilon(1e-14));
  const std::vector<double> yy{1.25, 1.25};
  CHECK(crps_empirical(1.25, yy) == 0.0);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(crps_empirical(0.0, one), ConfigError);
}

TEST_CASE("crps_empirical against the normal closed form") {
  std::mt19937_64 rng(1);
  CHECK(std::abs(crps_empirical(0.0, normal_draws(10000, rng)) - 0.2337) < 0.005);

  double total = 0.0;
  for (int run = 0; run < 200; ++run) total += crps_empirical(0.0, normal_draws(100, rng));
  // Standard error of this mean is about 0.7%; 4 standard errors.
  CHECK(std::abs(total / 200.0 - kStdNormalCrps) / kStdNormalCrps < 0.03);
}

TEST_CASE("crps_empirical is positively homogeneous") {
  std::mt19937_64 rng(2);
  const auto x = normal_draws(50, rng);
  const double base = crps_empirical(0.3, x);
  for (double c : {0.5, 2.0, 8.0}) {
    std::vector<double> xs(x);
    for (double& v : xs) v *= c;
    CHECK(crps_empirical(0.3 * c, xs) == doctest::Approx(c * base).epsilon(1e-13));
  }
}

TEST_CASE("crps_normal closed form") {
  CHECK(crps_normal(0.0, 0.0, 1.0) == doctest::Approx(kStdNormalCrps).epsilon(1e-6));
  CHECK(crps_normal(0.0, 0.0, 1.0) ==
        doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi) - 1.0 / std::sqrt(std::numbers::pi)));
  CHECK(crps_normal(6.0, 2.0, 3.0) == doctest::Approx(3.0 * crps_normal(2.0, 2.0 / 3.0, 1.0)));
  // Far from the mass the score tends to |y - mu| - sigma / sqrt(pi).
  const double tail = 8.0 - 1.0 / std::sqrt(std::numbers::pi);
  CHECK(crps_normal(8.0, 0.0, 1.0) == doctest::Approx(tail).epsilon(1e-9));
  CHECK(crps_normal(-8.0, 0.0, 1.0) == doctest::Approx(tail).epsilon(1e-9));
  CHECK_THROWS_AS(crps_normal(0.0, 0.0, 0.0), ConfigError);
}

TEST_CASE("quantile loss") {
  CHECK(quantile_loss(3.0, 0.5, 1.0) == 1.0);
  CHECK(quantile_loss(1.0, 0.9, 0.0) == doctest::Approx(0.9));
  for (double q : {0.1, 0.5, 0.99}) CHECK(quantile_loss(2.0, q, 2.0) == 0.0);
  CHECK_THROWS_AS(quantile_loss(0.0, 1.0, 0.0), ConfigError);
}

TEST_CASE("crps_from_quantiles") {
  const auto grid = default_quantile_grid();
  REQUIRE(grid.size() == 99);
  CHECK(grid.front() == doctest::Approx(0.01));
  CHECK(grid.back() == doctest::Approx(0.99));

  const std::vector<double> constant(99, 1.5);
  CHECK(std::abs(crps_from_quantiles(4.0, constant, grid) - 2.5) <= 0.02 * 2.5);

  std::vector<double> qs(99);
  for (std::size_t i = 0; i < 99; ++i) qs[i] = inverse_normal_cdf(grid[i]);
  CHECK(std::abs(crps_from_quantiles(0.0, qs, grid) - kStdNormalCrps) < 0.02 * kStdNormalCrps);
  // Symmetric forecast: y and its reflection score the same.
  CHECK(crps_from_quantiles(0.7, qs, grid) == doctest::Approx(crps_from_quantiles(-0.7, qs, grid)));

  for (double y : {-1.0, 0.0, 2.0}) {
    const double exact = crps_normal(y, 0.0, 1.0);
    CHECK(std::abs(crps_from_quantiles(y, qs, grid) - exact) / exact < 0.02);
    const auto fine = uniform_grid(999);
    std::vector<double> fq(999);
    for (std::size_t i = 0; i < 999; ++i) fq[i] = inverse_normal_cdf(fine[i]);
    CHECK(std::abs(crps_from_quantiles(y, fq, fine) - exact) / exact < 0.003);
  }
  const std::vector<double> short_values(5, 0.0);
  CHECK_THROWS_AS(crps_from_quantiles(0.0, short_values, grid), ShapeError);
}

TEST_CASE("energy score: scalar identity, constant samples, translation") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = normal_draws(2 + rng() % 40, rng);
    const Tensor samples(Shape{1, x.size()}, x);
    const double y = normal_draws(1, rng)[0];
    const double y1[] = {y};
    CHECK(std::abs(energy_score(y1, samples, 1.0) - crps_empirical(y, x)) <= 1e-12);
  }
  const Tensor same(Shape{2, 4}, {1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0});
  const double y2[] = {4.0, 6.0};
  CHECK(energy_score(y2, same, 1.0) == doctest::Approx(5.0));
  CHECK(energy_score(y2, same, 0.5) == doctest::Approx(std::sqrt(5.0)));

  // Shifting samples and target together leaves the score unchanged.
  const Tensor pts = clover::testing::random_tensor({3, 30}, rng);
  Tensor shifted = pts;
  const double v[] = {0.3, -1.2, 2.0};
  for (std::size_t d = 0; d < 3; ++d) {
    for (std::size_t i = 0; i < 30; ++i) shifted.at(d, i) += v[d];
  }
  const double y3[] = {0.0, 0.0, 0.0};
  const double y3s[] = {0.3, -1.2, 2.0};
  CHECK(std::abs(energy_score(y3, pts, 1.3) - energy_score(y3s, shifted, 1.3)) <= 1e-12);

  CHECK_THROWS_AS(energy_score(y2, same, 2.0), ConfigError);
  CHECK_THROWS_AS(energy_score(y2, Tensor(Shape{2, 1}), 1.0), ConfigError);
}

TEST_CASE("scrps: perfect forecast, additivity, normal oracle") {
  const auto spec = clover::testing::small_spec();
  const auto masks = level_masks(spec);
  std::mt19937_64 rng(4);
  const Tensor targets = clover::testing::random_tensor({7, 3}, rng, 1.0, 5.0);

  Tensor perfect(Shape{7, 3, 4});
  for (std::size_t r = 0; r < 21; ++r) {
    for (std::size_t s = 0; s < 4; ++s) perfect[r * 4 + s] = targets[r];
  }
  for (const auto& m : masks) CHECK(scrps(targets, perfect, m) == 0.0);

  const Tensor samples = clover::testing::random_tensor({7, 3, 50}, rng, 0.0, 6.0);
  const ScoreParts all = scrps_parts(targets, samples, overall_mask(7));
  double num = 0.0;
  double den = 0.0;
  for (const auto& m : masks) {
    const ScoreParts p = scrps_parts(targets, samples, m);
    num += p.numerator;
    den += p.denominator;
  }
  CHECK(std::abs(num - all.numerator) <= 1e-12);
  CHECK(std::abs(den - all.denominator) <= 1e-12);

  // Two series with normal forecasts.
  const double mu[] = {3.0, 5.0};
  const double sd[] = {1.0, 2.0};
  const double y[] = {3.5, 2.0};
  const std::size_t n = 20000;
  Tensor tg(Shape{2, 1}, {y[0], y[1]});
  Tensor sm(Shape{2, 1, n});
  double expect_num = 0.0;
  for (std::size_t r = 0; r < 2; ++r) {
    const auto d = normal_draws(n, rng, mu[r], sd[r]);
    std::copy(d.begin(), d.end(), sm.values().begin() + static_cast<std::ptrdiff_t>(r * n));
    expect_num += crps_normal(y[r], mu[r], sd[r]);
  }
  const double expect = expect_num / (y[0] + y[1]);
  CHECK(std::abs(scrps(tg, sm, overall_mask(2)) - expect) / expect < 0.02);

  Tensor zero(Shape{7, 3}, 0.0);
  CHECK_THROWS_AS(scrps(zero, samples, overall_mask(7)), NumericalError);
  CHECK_THROWS_AS(scrps(targets, samples, overall_mask(6)), ShapeError);
}

TEST_CASE("rel_se reference cases") {
  const Tensor targets(Shape{1, 1}, {4.0});
  const std::vector<double> last{2.0};
  const LevelMask all = overall_mask(1);
  CHECK(rel_se(targets, Tensor(Shape{1, 1}, {2.0}), last, all) == 1.0);
  CHECK(rel_se(targets, Tensor(Shape{1, 1}, {4.0}), last, all) == 0.0);
  CHECK(rel_se(targets, Tensor(Shape{1, 1}, {3.0}), last, all) == 0.25);
  const std::vector<double> flat{4.0};
  CHECK_THROWS_AS(rel_se(targets, Tensor(Shape{1, 1}, {3.0}), flat, all), NumericalError);
}

TEST_CASE("metric names") {
  CHECK(parse_metric("scrps") == Metric::kScrps);
  CHECK(parse_metric("relse") == Metric::kRelSe);
  CHECK(parse_metric("ql") == Metric::kQuantileLoss);
  CHECK(metric_name(Metric::kRelSe) == "relse");
  CHECK_THROWS_AS(parse_metric("mase"), ConfigError);
}

TEST_CASE("evaluate_report covers every mask plus overall") {
  const auto spec = clover::testing::small_spec();
  const auto masks = level_masks(spec);
  std::mt19937_64 rng(5);
  const Tensor targets = clover::testing::random_tensor({7, 2}, rng, 1.0, 5.0);
  const Tensor samples = clover::testing::random_tensor({7, 2, 30}, rng, 0.0, 6.0);
  const std::vector<double> last(7, 0.5);
  for (Metric m : {Metric::kScrps, Metric::kRelSe, Metric::kQuantileLoss}) {
    const auto rep = evaluate_report(m, {&targets, &samples, last, 9}, masks);
    REQUIRE(rep.per_level.size() == 3);
    CHECK(rep.per_level[0].first == "total");
    CHECK(rep.per_level[1].first == "state");
    CHECK(rep.per_level[2].first == "bottom");
    CHECK(std::isfinite(rep.overall));
    CHECK(rep.n_samples == 30);
    CHECK(rep.seed == 9);
  }
  // The quantile-grid score approximates the sample CRPS.
  const auto a = evaluate_report(Metric::kScrps, {&targets, &samples, last, 0}, masks);
  const auto b = evaluate_report(Metric::kQuantileLoss, {&targets, &samples, last, 0}, masks);
  CHECK(std::abs(a.overall - b.overall) / a.overall < 0.1);
}

TEST_CASE("PIT and KS") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  CHECK(pit_value(0.0, s) == 0.0);
  CHECK(pit_value(5.0, s) == 1.0);
  CHECK(pit_value(2.5, s) == 0.5);
  CHECK(pit_value(2.0, s, 0.5) == doctest::Approx(1.5 / 4.0));
  CHECK(pit_value(2.0, s, 0.0) == 0.25);
  CHECK_THROWS_AS(pit_value(0.0, std::vector<double>{}), ConfigError);

  CHECK(ks_uniform_distance({0.5}) == 0.5);
  std::vector<double> even(1000);
  for (std::size_t i = 0; i < 1000; ++i) even[i] = (i + 0.5) / 1000.0;
  CHECK(ks_uniform_distance(even) == doctest::Approx(0.0005));
  CHECK(ks_uniform_distance(std::vector<double>(10, 0.0)) == 1.0);
}
