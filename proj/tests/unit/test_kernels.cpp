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

// Serial/parallel parity is exact equality: the parallel kernels only split
// independent outputs across threads.

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "clover/kernels.hpp"
#include "doctest.h"

namespace k = clover::kernels;

namespace {

std::vector<double> randv(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

double brute_crps(double y, const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  double a = 0.0;
  double b = 0.0;
  for (double xi : x) a += std::abs(xi - y);
  for (double xi : x) {
    for (double xj : x) b += std::abs(xi - xj);
  }
  return a / n - b / (2.0 * n * (n - 1.0));
}

double brute_energy(std::size_t n, std::size_t dim, const std::vector<double>& p,
                    const std::vector<double>& y, double beta) {
  auto dist = [&](const double* a, const double* b) {
    double s = 0.0;
    for (std::size_t d = 0; d < dim; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
    return std::pow(std::sqrt(s), beta);
  };
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < n; ++i) a += dist(&p[i * dim], y.data());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) b += dist(&p[i * dim], &p[j * dim]);
  }
  const double nn = static_cast<double>(n);
  return a / nn - b / (2.0 * nn * (nn - 1.0));
}

struct ThreadGuard {
  int saved = omp_get_max_threads();
  explicit ThreadGuard(int n) { omp_set_num_threads(n); }
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("matmul kernels: serial == parallel, and against a triple loop") {
  ThreadGuard threads(4);
  std::mt19937_64 rng(1);
  const k::MatmulDims d{7, 5, 9};
  const auto a = randv(d.m * d.k, rng);
  const auto b = randv(d.k * d.n, rng);
  const auto dc = randv(d.m * d.n, rng);
  std::vector<double> cs(d.m * d.n), cp(d.m * d.n);
  k::serial::matmul(d, a, b, cs);
  k::parallel::matmul(d, a, b, cp);
  CHECK(cs == cp);
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < d.k; ++l) s += a[i * d.k + l] * b[l * d.n + j];
      CHECK(cs[i * d.n + j] == doctest::Approx(s).epsilon(1e-13));
    }
  }
  std::vector<double> das(d.m * d.k, 0.5), dap(d.m * d.k, 0.5);
  k::serial::matmul_grad_a_accumulate(d, dc, b, das);
  k::parallel::matmul_grad_a_accumulate(d, dc, b, dap);
  CHECK(das == dap);
  std::vector<double> dbs(d.k * d.n, 0.0), dbp(d.k * d.n, 0.0);
  k::serial::matmul_grad_b_accumulate(d, a, dc, dbs);
  k::parallel::matmul_grad_b_accumulate(d, a, dc, dbp);
  CHECK(dbs == dbp);
  // da = 0.5 + dc b^T
  double s = 0.5;
  for (std::size_t j = 0; j < d.n; ++j) s += dc[2 * d.n + j] * b[3 * d.n + j];
  CHECK(das[2 * d.k + 3] == doctest::Approx(s).epsilon(1e-13));
}

TEST_CASE("conv kernels: serial == parallel") {
  ThreadGuard threads(3);
  std::mt19937_64 rng(2);
  const k::ConvDims d{3, 2, 4, 15, 2, 4};
  const auto x = randv(d.series * d.c_in * d.time, rng);
  const auto w = randv(d.c_out * d.c_in * d.taps, rng);
  const auto bias = randv(d.c_out, rng);
  const auto dy = randv(d.series * d.c_out * d.time, rng);
  std::vector<double> ys(dy.size()), yp(dy.size());
  k::serial::conv1d(d, x, w, bias, ys);
  k::parallel::conv1d(d, x, w, bias, yp);
  CHECK(ys == yp);
  std::vector<double> dxs(x.size(), 0.0), dxp(x.size(), 0.0);
  k::serial::conv1d_grad_input_accumulate(d, dy, w, dxs);
  k::parallel::conv1d_grad_input_accumulate(d, dy, w, dxp);
  CHECK(dxs == dxp);
  std::vector<double> dws(w.size(), 0.0), dwp(w.size(), 0.0), dbs(bias.size(), 0.0),
      dbp(bias.size(), 0.0);
  k::serial::conv1d_grad_params_accumulate(d, dy, x, dws, dbs);
  k::parallel::conv1d_grad_params_accumulate(d, dy, x, dwp, dbp);
  CHECK(dws == dwp);
  CHECK(dbs == dbp);
}

TEST_CASE("crps_rows matches the O(N^2) definition; serial == parallel") {
  ThreadGuard threads(4);
  std::mt19937_64 rng(3);
  const std::size_t rows = 11;
  const std::size_t n = 37;
  auto samples = randv(rows * n, rng, -2.0, 2.0);
  samples[5] = samples[6];  // ties
  const auto targets = randv(rows, rng, -2.0, 2.0);
  std::vector<double> s(rows), p(rows);
  k::serial::crps_rows(rows, n, samples, targets, s);
  k::parallel::crps_rows(rows, n, samples, targets, p);
  CHECK(s == p);
  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<double> row(samples.begin() + r * n, samples.begin() + (r + 1) * n);
    CHECK(s[r] == doctest::Approx(brute_crps(targets[r], row)).epsilon(1e-12));
  }
}

TEST_CASE("crps_rows gradient matches finite differences") {
  std::mt19937_64 rng(4);
  const std::size_t rows = 3;
  const std::size_t n = 9;
  const auto samples = randv(rows * n, rng, -2.0, 2.0);
  const auto targets = randv(rows, rng, -2.0, 2.0);
  const std::vector<double> up{1.0, -0.5, 2.0};
  std::vector<double> gs(samples.size(), 0.0), gp(samples.size(), 0.0);
  k::serial::crps_rows_grad_accumulate(rows, n, samples, targets, up, gs);
  k::parallel::crps_rows_grad_accumulate(rows, n, samples, targets, up, gp);
  CHECK(gs == gp);
  auto total = [&](const std::vector<double>& x) {
    std::vector<double> out(rows);
    k::serial::crps_rows(rows, n, x, targets, out);
    return up[0] * out[0] + up[1] * out[1] + up[2] * out[2];
  };
  const double h = 1e-6;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    auto xp = samples;
    auto xm = samples;
    xp[i] += h;
    xm[i] -= h;
    CHECK(gs[i] == doctest::Approx((total(xp) - total(xm)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("energy kernel matches brute force; serial == parallel") {
  ThreadGuard threads(4);
  std::mt19937_64 rng(5);
  for (double beta : {0.5, 1.0, 1.7}) {
    const std::size_t n = 23;
    const std::size_t dim = 4;
    const auto pts = randv(n * dim, rng);
    const auto y = randv(dim, rng);
    const double s = k::serial::energy(n, dim, pts, y, beta);
    const double p = k::parallel::energy(n, dim, pts, y, beta);
    CHECK(s == p);
    CHECK(s == doctest::Approx(brute_energy(n, dim, pts, y, beta)).epsilon(1e-12));

    std::vector<double> gs(pts.size(), 0.0), gp(pts.size(), 0.0);
    k::serial::energy_grad_accumulate(n, dim, pts, y, beta, 1.5, gs);
    k::parallel::energy_grad_accumulate(n, dim, pts, y, beta, 1.5, gp);
    CHECK(gs == gp);
    const double h = 1e-6;
    for (std::size_t i = 0; i < pts.size(); i += 5) {
      auto xp = pts;
      auto xm = pts;
      xp[i] += h;
      xm[i] -= h;
      const double fd = 1.5 * (brute_energy(n, dim, xp, y, beta) - brute_energy(n, dim, xm, y, beta)) /
                        (2 * h);
      CHECK(gs[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("quantile_rows is type-7 interpolation") {
  ThreadGuard threads(2);
  const std::vector<double> samples{4, 1, 3, 2, 5, 10, 20, 30, 40, 50};
  const std::vector<double> levels{0.0, 0.1, 0.5, 0.9, 1.0};
  std::vector<double> s(10), p(10);
  k::serial::quantile_rows(2, 5, samples, levels, s);
  k::parallel::quantile_rows(2, 5, samples, levels, p);
  CHECK(s == p);
  // sorted 1..5: position q * 4
  CHECK(s[0] == 1.0);
  CHECK(s[1] == doctest::Approx(1.4));
  CHECK(s[2] == 3.0);
  CHECK(s[3] == doctest::Approx(4.6));
  CHECK(s[4] == 5.0);
  CHECK(s[7] == 30.0);
}

TEST_CASE("max_threads reports OpenMP") { CHECK(k::max_threads() >= 1); }
