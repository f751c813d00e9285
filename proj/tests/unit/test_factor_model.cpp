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
#include <random>
#include <vector>

#include "clover/error.hpp"
#include "clover/factor_model.hpp"
#include "clover/ops.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace clover;
using clover::testing::random_tensor;

namespace {

struct Params {
  Tensor mu;
  Tensor sigma;
  Tensor f;
};

Params random_params(std::size_t nb, std::size_t nk, std::size_t nh, std::mt19937_64& rng,
                     double mu_lo = -1.0, double mu_hi = 1.0) {
  return {random_tensor({nb, nh}, rng, mu_lo, mu_hi), random_tensor({nb, nh}, rng, 0.2, 1.5),
          random_tensor({nb, nk, nh}, rng, -1.0, 1.0)};
}

FactorParams bind(Tape& tape, const Params& p) {
  return {tape.constant(p.mu), tape.constant(p.sigma), tape.constant(p.f)};
}

}  // namespace

TEST_CASE("draw_noise is deterministic and standard normal") {
  const NoiseDraws a = draw_noise(3, 2, 4, 50, 99);
  const NoiseDraws b = draw_noise(3, 2, 4, 50, 99);
  CHECK(std::vector<double>(a.z.values().begin(), a.z.values().end()) ==
        std::vector<double>(b.z.values().begin(), b.z.values().end()));
  CHECK(a.eps.shape() == Shape{2, 4, 50});

  const NoiseDraws none = draw_noise(2, 0, 3, 10, 1);
  CHECK(none.eps.size() == 0);
  CHECK_THROWS_AS(draw_noise(2, 1, 3, 0, 1), ConfigError);

  const std::size_t n = 100000;
  const NoiseDraws big = draw_noise(2, 1, 1, n, 5);
  for (const Tensor* t : {&big.z, &big.eps}) {
    for (std::size_t slice = 0; slice < t->size() / n; ++slice) {
      double m = 0.0;
      double v = 0.0;
      for (std::size_t s = 0; s < n; ++s) m += (*t)[slice * n + s];
      m /= n;
      for (std::size_t s = 0; s < n; ++s) v += std::pow((*t)[slice * n + s] - m, 2);
      v /= n - 1;
      CHECK(std::abs(m) < 0.02);
      CHECK(std::abs(v - 1.0) < 0.02);
    }
  }
}

TEST_CASE("sample with no noise returns mu") {
  std::mt19937_64 rng(1);
  const auto s = build_aggregation_matrix(clover::testing::small_spec());
  Params p = random_params(4, 0, 3, rng);
  NoiseDraws noise = draw_noise(4, 0, 3, 5, 2);
  for (double& z : noise.z.values()) z = 0.0;
  Tape tape;
  const SampleSet out = sample(bind(tape, p), noise, s);
  for (std::size_t b = 0; b < 4; ++b) {
    for (std::size_t h = 0; h < 3; ++h) {
      for (std::size_t k = 0; k < 5; ++k) CHECK(out.bottom_raw.value().at(b, h, k) == p.mu.at(b, h));
    }
  }
}

TEST_CASE("shared factor moves every series together") {
  HierarchySpec spec;
  spec.bottom_ids = {"x", "y"};
  const auto s = build_aggregation_matrix(spec);
  Tape tape;
  const FactorParams fp{tape.constant(Tensor(Shape{2, 1}, 0.0)),
                        tape.constant(Tensor(Shape{2, 1}, 1e-9)),
                        tape.constant(Tensor(Shape{2, 1, 1}, 1.0))};
  NoiseDraws noise = draw_noise(2, 1, 1, 1, 3);
  noise.eps[0] = 1.0;
  const Tensor c = sample(fp, noise, s).coherent.value();
  CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(c[2] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("sample matches the explicit formula and is coherent and non-negative") {
  std::mt19937_64 rng(2);
  const auto s = build_aggregation_matrix(clover::testing::halves_spec(5));
  const Params p = random_params(5, 3, 2, rng);
  const NoiseDraws noise = draw_noise(5, 3, 2, 40, 11);
  Tape tape;
  const SampleSet out = sample(bind(tape, p), noise, s);
  const Tensor& raw = out.bottom_raw.value();
  const Tensor& coh = out.coherent.value();
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t h = 0; h < 2; ++h) {
      for (std::size_t n = 0; n < 40; ++n) {
        double expect = p.mu.at(b, h) + p.sigma.at(b, h) * noise.z.at(b, h, n);
        for (std::size_t k = 0; k < 3; ++k) expect += p.f.at(b, k, h) * noise.eps.at(k, h, n);
        CHECK(raw.at(b, h, n) == doctest::Approx(expect).epsilon(1e-13));
        CHECK(coh.at(s.n_aggregate() + b, h, n) == std::max(raw.at(b, h, n), 0.0));
      }
    }
  }
  double worst = 0.0;
  for (std::size_t r = 0; r < s.n_aggregate(); ++r) {
    for (std::size_t e = 0; e < 2 * 40; ++e) {
      double sum = 0.0;
      for (std::size_t b = 0; b < 5; ++b) {
        if (s(r, b) == 1.0) sum += coh[(s.n_aggregate() + b) * 80 + e];
      }
      worst = std::max(worst, std::abs(coh[r * 80 + e] - sum));
    }
  }
  CHECK(worst <= 1e-9);
  for (double v : coh.values()) CHECK(v >= 0.0);
}

TEST_CASE("sample rejects bad inputs") {
  std::mt19937_64 rng(3);
  const auto s = build_aggregation_matrix(clover::testing::small_spec());
  Params p = random_params(4, 1, 2, rng);
  Tape tape;
  CHECK_THROWS_AS(sample(bind(tape, p), draw_noise(4, 2, 2, 5, 1), s), ShapeError);
  CHECK_THROWS_AS(sample(bind(tape, p), draw_noise(3, 1, 2, 5, 1), s), ShapeError);
  p.sigma[0] = 0.0;
  CHECK_THROWS_AS(sample(bind(tape, p), draw_noise(4, 1, 2, 5, 1), s), NumericalError);
  Params q = random_params(3, 1, 2, rng);
  CHECK_THROWS_AS(sample(bind(tape, q), draw_noise(3, 1, 2, 5, 1), s), ShapeError);
}

TEST_CASE("sample gradients match finite differences away from the clip") {
  std::mt19937_64 rng(4);
  const auto s = build_aggregation_matrix(clover::testing::small_spec());
  Params p = random_params(4, 2, 3, rng, 8.0, 10.0);
  const NoiseDraws noise = draw_noise(4, 2, 3, 10, 7);
  const Tensor weight = random_tensor({7, 3, 10}, rng);
  auto loss_with = [&](int which) {
    return [&, which](Tape& t, const Var& v) {
      FactorParams fp = bind(t, p);
      (which == 0 ? fp.mu : which == 1 ? fp.sigma : fp.loadings) = v;
      const SampleSet out = sample(fp, noise, s);
      for (double x : out.bottom_raw.value().values()) REQUIRE(x > 0.0);
      return sum(out.coherent * t.constant(weight));
    };
  };
  using clover::testing::all_indices;
  using clover::testing::check_gradient;
  CHECK(check_gradient(p.mu, loss_with(0), all_indices(p.mu)).max_rel_err < 1e-5);
  CHECK(check_gradient(p.sigma, loss_with(1), all_indices(p.sigma)).max_rel_err < 1e-5);
  CHECK(check_gradient(p.f, loss_with(2), all_indices(p.f)).max_rel_err < 1e-5);
}

TEST_CASE("gradient of mean(coherent) wrt mu is column sums of S over N_s") {
  std::mt19937_64 rng(5);
  const auto s = build_aggregation_matrix(clover::testing::small_spec());
  Params p = random_params(4, 1, 2, rng, 10.0, 12.0);
  const NoiseDraws noise = draw_noise(4, 1, 2, 25, 3);
  Tape tape;
  const Var mu = tape.watch(p.mu);
  const SampleSet out = sample({mu, tape.constant(p.sigma), tape.constant(p.f)}, noise, s);
  const Var m = mean(out.coherent);
  tape.backward(m);
  // Each bottom series feeds total, its state and itself: 3 rows.
  const double expect = 3.0 / static_cast<double>(7 * 2);
  for (double g : p.mu.grad()) CHECK(g == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("implied covariance") {
  Tape tape;
  const FactorParams fp{tape.constant(Tensor(Shape{2, 1}, 0.0)),
                        tape.constant(Tensor(Shape{2, 1}, 1.0)),
                        tape.constant(Tensor(Shape{2, 1, 1}, 1.0))};
  const Tensor c = implied_covariance(fp, 1);
  CHECK(c.at(0, 0) == 2.0);
  CHECK(c.at(0, 1) == 1.0);
  CHECK(c.at(1, 0) == 1.0);
  CHECK(c.at(1, 1) == 2.0);
  CHECK_THROWS_AS(implied_covariance(fp, 0), ConfigError);
  CHECK_THROWS_AS(implied_covariance(fp, 2), ConfigError);

  const FactorParams diag{tape.constant(Tensor(Shape{2, 1}, 0.0)),
                          tape.constant(Tensor(Shape{2, 1}, {2.0, 3.0})),
                          tape.constant(Tensor(Shape{2, 0, 1}))};
  const Tensor d = implied_covariance(diag, 1);
  CHECK(d.at(0, 0) == 4.0);
  CHECK(d.at(1, 1) == 9.0);
  CHECK(d.at(0, 1) == 0.0);
}

TEST_CASE("implied covariance matches Monte Carlo for small random models") {
  std::mt19937_64 rng(6);
  const std::size_t n = 40000;
  for (std::size_t nb : {2u, 4u, 6u}) {
    for (std::size_t nk : {0u, 1u, 3u}) {
      const auto s = build_aggregation_matrix(clover::testing::halves_spec(nb));
      const Params p = random_params(nb, nk, 1, rng);
      Tape tape;
      const FactorParams fp = bind(tape, p);
      const Tensor raw = sample(fp, draw_noise(nb, nk, 1, n, rng()), s).bottom_raw.value();
      const Tensor cov = implied_covariance(fp, 1);
      double max_diag = 0.0;
      for (std::size_t i = 0; i < nb; ++i) max_diag = std::max(max_diag, cov.at(i, i));
      for (std::size_t i = 0; i < nb; ++i) {
        for (std::size_t j = 0; j < nb; ++j) {
          double mi = 0.0;
          double mj = 0.0;
          for (std::size_t k = 0; k < n; ++k) {
            mi += raw[i * n + k];
            mj += raw[j * n + k];
          }
          mi /= n;
          mj /= n;
          double c = 0.0;
          for (std::size_t k = 0; k < n; ++k) c += (raw[i * n + k] - mi) * (raw[j * n + k] - mj);
          c /= n - 1;
          CHECK(std::abs(c - cov.at(i, j)) <= 0.05 * max_diag);
        }
      }
    }
  }
}

TEST_CASE("single positive factor with tiny sigma: correlations near one") {
  const std::size_t nb = 4;
  const std::size_t n = 10000;
  Tape tape;
  const FactorParams fp{tape.constant(Tensor(Shape{nb, 1}, 0.0)),
                        tape.constant(Tensor(Shape{nb, 1}, 1e-3)),
                        tape.constant(Tensor(Shape{nb, 1, 1}, 1.0))};
  const auto s = build_aggregation_matrix(clover::testing::halves_spec(nb));
  const Tensor raw = sample(fp, draw_noise(nb, 1, 1, n, 17), s).bottom_raw.value();
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = i + 1; j < nb; ++j) {
      double si = 0, sj = 0, sii = 0, sjj = 0, sij = 0;
      for (std::size_t k = 0; k < n; ++k) {
        const double a = raw[i * n + k];
        const double b = raw[j * n + k];
        si += a;
        sj += b;
        sii += a * a;
        sjj += b * b;
        sij += a * b;
      }
      const double cov = sij / n - si * sj / (n * n);
      const double corr = cov / std::sqrt((sii / n - si * si / (n * n)) * (sjj / n - sj * sj / (n * n)));
      CHECK(corr > 0.99);
    }
  }
}

TEST_CASE("empirical quantiles") {
  Tensor constant(Shape{1, 1, 5}, 2.5);
  const std::vector<double> levels{0.1, 0.5, 0.9};
  const Tensor flat = empirical_quantiles(constant, levels);
  for (double v : flat.values()) CHECK(v == 2.5);

  Tensor grid(Shape{1, 1, 101});
  for (std::size_t i = 0; i < 101; ++i) grid[i] = static_cast<double>(100 - i);
  const std::vector<double> half{0.5};
  CHECK(empirical_quantiles(grid, half)[0] == 50.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  Tensor draws(Shape{1, 1, 100000});
  for (double& v : draws.values()) v = normal(rng);
  const std::vector<double> q9{0.9};
  CHECK(std::abs(empirical_quantiles(draws, q9)[0] - 1.2816) < 0.02);

  const Tensor q = empirical_quantiles(draws, levels);
  CHECK(q[0] < q[1]);
  CHECK(q[1] < q[2]);

  const std::vector<double> bad{0.0};
  CHECK_THROWS_AS(empirical_quantiles(draws, bad), ConfigError);
  CHECK_THROWS_AS(empirical_quantiles(Tensor(Shape{1, 1, 1}), half), ConfigError);
}

TEST_CASE("sample mean") {
  const Tensor t(Shape{1, 2, 2}, {1.0, 3.0, -2.0, 2.0});
  const Tensor m = sample_mean(t);
  CHECK(m[0] == 2.0);
  CHECK(m[1] == 0.0);
}
