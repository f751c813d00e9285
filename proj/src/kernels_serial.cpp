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

// Reference kernels. Plain loops, one output element at a time.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "clover/kernels.hpp"
#include "kernels_common.hpp"

namespace clover::kernels::serial {

void matmul(MatmulDims d, std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < d.k; ++p) acc += a[i * d.k + p] * b[p * d.n + j];
      c[i * d.n + j] = acc;
    }
  }
}

void matmul_grad_a_accumulate(MatmulDims d, std::span<const double> dc,
                              std::span<const double> b, std::span<double> da) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t p = 0; p < d.k; ++p) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d.n; ++j) acc += dc[i * d.n + j] * b[p * d.n + j];
      da[i * d.k + p] += acc;
    }
  }
}

void matmul_grad_b_accumulate(MatmulDims d, std::span<const double> a,
                              std::span<const double> dc, std::span<double> db) {
  for (std::size_t p = 0; p < d.k; ++p) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < d.m; ++i) acc += a[i * d.k + p] * dc[i * d.n + j];
      db[p * d.n + j] += acc;
    }
  }
}

void conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
            std::span<const double> bias, std::span<double> y) {
  for (std::size_t s = 0; s < d.series; ++s) {
    for (std::size_t o = 0; o < d.c_out; ++o) {
      for (std::size_t t = 0; t < d.time; ++t) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d.c_in; ++c) {
          for (std::size_t j = 0; j < d.taps; ++j) {
            const std::size_t lag = (d.taps - 1 - j) * d.dilation;
            if (lag > t) continue;
            acc += w[(o * d.c_in + c) * d.taps + j] *
                   x[(s * d.c_in + c) * d.time + (t - lag)];
          }
        }
        y[(s * d.c_out + o) * d.time + t] = bias.empty() ? acc : acc + bias[o];
      }
    }
  }
}

void conv1d_grad_input_accumulate(ConvDims d, std::span<const double> dy,
                                  std::span<const double> w,
                                  std::span<double> dx) {
  for (std::size_t s = 0; s < d.series; ++s) {
    for (std::size_t c = 0; c < d.c_in; ++c) {
      for (std::size_t tau = 0; tau < d.time; ++tau) {
        double acc = 0.0;
        for (std::size_t o = 0; o < d.c_out; ++o) {
          for (std::size_t j = 0; j < d.taps; ++j) {
            const std::size_t t = tau + (d.taps - 1 - j) * d.dilation;
            if (t >= d.time) continue;
            acc += w[(o * d.c_in + c) * d.taps + j] *
                   dy[(s * d.c_out + o) * d.time + t];
          }
        }
        dx[(s * d.c_in + c) * d.time + tau] += acc;
      }
    }
  }
}

void conv1d_grad_params_accumulate(ConvDims d, std::span<const double> dy,
                                   std::span<const double> x,
                                   std::span<double> dw,
                                   std::span<double> dbias) {
  for (std::size_t o = 0; o < d.c_out; ++o) {
    for (std::size_t c = 0; c < d.c_in; ++c) {
      for (std::size_t j = 0; j < d.taps; ++j) {
        const std::size_t lag = (d.taps - 1 - j) * d.dilation;
        double acc = 0.0;
        for (std::size_t s = 0; s < d.series; ++s) {
          for (std::size_t t = lag; t < d.time; ++t) {
            acc += dy[(s * d.c_out + o) * d.time + t] *
                   x[(s * d.c_in + c) * d.time + (t - lag)];
          }
        }
        dw[(o * d.c_in + c) * d.taps + j] += acc;
      }
    }
    if (!dbias.empty()) {
      double acc = 0.0;
      for (std::size_t s = 0; s < d.series; ++s) {
        for (std::size_t t = 0; t < d.time; ++t) acc += dy[(s * d.c_out + o) * d.time + t];
      }
      dbias[o] += acc;
    }
  }
}

void crps_rows(std::size_t rows, std::size_t n, std::span<const double> samples,
               std::span<const double> targets, std::span<double> out) {
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < rows; ++r) {
    out[r] = detail::crps_row(samples.subspan(r * n, n), targets[r], sorted);
  }
}

void crps_rows_grad_accumulate(std::size_t rows, std::size_t n,
                               std::span<const double> samples,
                               std::span<const double> targets,
                               std::span<const double> upstream,
                               std::span<double> dsamples) {
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < rows; ++r) {
    detail::crps_row_grad(samples.subspan(r * n, n), targets[r], upstream[r],
                          sorted, dsamples.subspan(r * n, n));
  }
}

double energy(std::size_t n, std::size_t dim, std::span<const double> points,
              std::span<const double> y, double beta) {
  std::vector<double> to_target(n);
  std::vector<double> pairwise(n);
  for (std::size_t i = 0; i < n; ++i) {
    to_target[i] = detail::distance_pow(points.subspan(i * dim, dim), y, beta);
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += detail::distance_pow(points.subspan(i * dim, dim),
                                  points.subspan(j * dim, dim), beta);
    }
    pairwise[i] = acc;
  }
  return detail::energy_combine(to_target, pairwise);
}

void energy_grad_accumulate(std::size_t n, std::size_t dim,
                            std::span<const double> points,
                            std::span<const double> y, double beta,
                            double upstream, std::span<double> dpoints) {
  for (std::size_t i = 0; i < n; ++i) {
    detail::energy_point_grad(n, dim, i, points, y, beta, upstream,
                              dpoints.subspan(i * dim, dim));
  }
}

void quantile_rows(std::size_t rows, std::size_t n,
                   std::span<const double> samples,
                   std::span<const double> levels, std::span<double> out) {
  std::vector<double> sorted(n);
  for (std::size_t r = 0; r < rows; ++r) {
    detail::quantile_row(samples.subspan(r * n, n), levels, sorted,
                         out.subspan(r * levels.size(), levels.size()));
  }
}

}  // namespace clover::kernels::serial
