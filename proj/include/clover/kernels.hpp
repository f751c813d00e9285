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

#pragma once

#include <cstddef>
#include <span>

// Numeric inner loops, each in two flavours.
//
// `serial` is the reference implementation kept for testing. `parallel`
// distributes independent outputs over OpenMP threads and keeps the
// per-output accumulation order of the serial code, so both produce
// bit-identical results for any thread count.
//
// All buffers are row-major. "_accumulate" kernels add into their output.
namespace clover::kernels {

struct MatmulDims {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t n = 0;
};

struct ConvDims {
  std::size_t series = 0;
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  std::size_t time = 0;
  std::size_t taps = 0;
  std::size_t dilation = 1;
};

#define CLOVER_KERNEL_SET                                                      \
  /* c[m,n] = a[m,k] * b[k,n] */                                               \
  void matmul(MatmulDims d, std::span<const double> a,                         \
              std::span<const double> b, std::span<double> c);                 \
  /* da[m,k] += dc[m,n] * b^T */                                               \
  void matmul_grad_a_accumulate(MatmulDims d, std::span<const double> dc,      \
                                std::span<const double> b,                     \
                                std::span<double> da);                         \
  /* db[k,n] += a^T * dc[m,n] */                                               \
  void matmul_grad_b_accumulate(MatmulDims d, std::span<const double> a,       \
                                std::span<const double> dc,                    \
                                std::span<double> db);                         \
  /* y = conv(x, w) + bias; bias may be empty */                               \
  void conv1d(ConvDims d, std::span<const double> x, std::span<const double> w, \
              std::span<const double> bias, std::span<double> y);             \
  void conv1d_grad_input_accumulate(ConvDims d, std::span<const double> dy,    \
                                    std::span<const double> w,                 \
                                    std::span<double> dx);                     \
  /* dbias may be empty */                                                     \
  void conv1d_grad_params_accumulate(ConvDims d, std::span<const double> dy,   \
                                     std::span<const double> x,                \
                                     std::span<double> dw,                     \
                                     std::span<double> dbias);                 \
  /* out[r] = fair CRPS of row r of samples[rows, n] against targets[r] */     \
  void crps_rows(std::size_t rows, std::size_t n,                              \
                 std::span<const double> samples,                              \
                 std::span<const double> targets, std::span<double> out);      \
  /* dsamples[r, :] += upstream[r] * d crps_r / d samples[r, :] */             \
  void crps_rows_grad_accumulate(std::size_t rows, std::size_t n,              \
                                 std::span<const double> samples,              \
                                 std::span<const double> targets,              \
                                 std::span<const double> upstream,             \
                                 std::span<double> dsamples);                  \
  /* fair energy score of points[n, dim] against y[dim] */                     \
  double energy(std::size_t n, std::size_t dim, std::span<const double> points, \
                std::span<const double> y, double beta);                       \
  void energy_grad_accumulate(std::size_t n, std::size_t dim,                  \
                              std::span<const double> points,                  \
                              std::span<const double> y, double beta,          \
                              double upstream, std::span<double> dpoints);     \
  /* type-7 quantiles of each row of samples[rows, n] at levels; out[rows, q] */ \
  void quantile_rows(std::size_t rows, std::size_t n,                          \
                     std::span<const double> samples,                          \
                     std::span<const double> levels, std::span<double> out);

namespace serial {
CLOVER_KERNEL_SET
}  // namespace serial

namespace parallel {
CLOVER_KERNEL_SET
}  // namespace parallel

#undef CLOVER_KERNEL_SET

// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

}  // namespace clover::kernels
