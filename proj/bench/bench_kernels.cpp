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

// Serial vs OpenMP kernels. Arg(0) is the serial reference, Arg(1) the
// parallel build.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "clover/kernels.hpp"

namespace {

namespace k = clover::kernels;

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n);
  for (double& x : v) x = normal(rng);
  return v;
}

void BM_Matmul(benchmark::State& state) {
  const k::MatmulDims d{256, 128, 256};
  const auto a = filled(d.m * d.k, 1);
  const auto b = filled(d.k * d.n, 2);
  std::vector<double> c(d.m * d.n);
  for (auto _ : state) {
    if (state.range(0) == 0) k::serial::matmul(d, a, b, c);
    else k::parallel::matmul(d, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(d.m * d.k * d.n));
}
BENCHMARK(BM_Matmul)->Arg(0)->Arg(1);

void BM_Conv(benchmark::State& state) {
  const k::ConvDims d{64, 16, 16, 128, 2, 4};
  const auto x = filled(d.series * d.c_in * d.time, 3);
  const auto w = filled(d.c_out * d.c_in * d.taps, 4);
  const auto bias = filled(d.c_out, 5);
  std::vector<double> y(d.series * d.c_out * d.time);
  for (auto _ : state) {
    if (state.range(0) == 0) k::serial::conv1d(d, x, w, bias, y);
    else k::parallel::conv1d(d, x, w, bias, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Conv)->Arg(0)->Arg(1);

void BM_CrpsRows(benchmark::State& state) {
  const std::size_t rows = 256;
  const std::size_t n = 200;
  const auto samples = filled(rows * n, 6);
  const auto targets = filled(rows, 7);
  std::vector<double> out(rows);
  for (auto _ : state) {
    if (state.range(0) == 0) k::serial::crps_rows(rows, n, samples, targets, out);
    else k::parallel::crps_rows(rows, n, samples, targets, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_CrpsRows)->Arg(0)->Arg(1);

void BM_Energy(benchmark::State& state) {
  const std::size_t n = 200;
  const std::size_t dim = 300;
  const auto points = filled(n * dim, 8);
  const auto y = filled(dim, 9);
  for (auto _ : state) {
    const double e = state.range(0) == 0 ? k::serial::energy(n, dim, points, y, 1.0)
                                         : k::parallel::energy(n, dim, points, y, 1.0);
    benchmark::DoNotOptimize(e);
  }
}
BENCHMARK(BM_Energy)->Arg(0)->Arg(1);

}  // namespace

BENCHMARK_MAIN();
