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

// OpenMP kernels. Work is split over independent outputs only; each output is
// accumulated in the same order as in kernels_serial.cpp.

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "clover/kernels.hpp"
#include "kernels_common.hpp"

namespace clover::kernels {

namespace {
// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kMinParallelWork = 1 << 14;

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace parallel {

void matmul(MatmulDims d, std::span<const double> a, std::span<const double> b,
            std::span<double> c) {
  const bool big = d.m * d.k * d.n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t ii = 0; ii < as_int(d.m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c.data() + i * d.n;
    std::fill(crow, crow + d.n, 0.0);
    for (std::size_t p = 0; p < d.k; ++p) {
      const double av = a[i * d.k + p];
      const double* brow = b.data() + p * d.n;
      for (std::size_t j = 0; j < d.n; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_grad_a_accumulate(MatmulDims d, std::span<const double> dc,
                              std::span<const double> b, std::span<double> da) {
  const bool big = d.m * d.k * d.n >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t ii = 0; ii < as_int(d.m); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* dcrow = dc.data() + i * d.n;
    for (std::size_t p = 0; p < d.k; ++p) {
      const double* brow = b.data() + p * d.n;
      double acc = 0.0;
      for (std::size_t j = 0; j < d.n; ++j) acc += dcrow[j] * brow[j];
      da[i * d.k + p] += acc;
    }
  }
}

void matmul_grad_b_accumulate(MatmulDims d, std::span<const double> a,
                              std::span<const double> dc, std::span<double> db) {
  const bool big = d.m * d.k * d.n >= kMinParallelWork;
#pragma omp parallel if (big)
  {
    std::vector<double> acc(d.n);
#pragma omp for schedule(static)
    for (std::int64_t pp = 0; pp < as_int(d.k); ++pp) {
      const auto p = static_cast<std::size_t>(pp);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < d.m; ++i) {
        const double av = a[i * d.k + p];
        const double* dcrow = dc.data() + i * d.n;
        for (std::size_t j = 0; j < d.n; ++j) acc[j] += av * dcrow[j];
      }
      for (std::size_t j = 0; j < d.n; ++j) db[p * d.n + j] += acc[j];
    }
  }
}

void conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
            std::span<const double> bias, std::span<double> y) {
  const std::size_t jobs = d.series * d.c_out;
  const bool big = jobs * d.time * d.c_in * d.taps >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t job = 0; job < as_int(jobs); ++job) {
    const std::size_t s = static_cast<std::size_t>(job) / d.c_out;
    const std::size_t o = static_cast<std::size_t>(job) % d.c_out;
    double* yrow = y.data() + (s * d.c_out + o) * d.time;
    std::fill(yrow, yrow + d.time, 0.0);
    for (std::size_t c = 0; c < d.c_in; ++c) {
      const double* xrow = x.data() + (s * d.c_in + c) * d.time;
      for (std::size_t j = 0; j < d.taps; ++j) {
        const double wv = w[(o * d.c_in + c) * d.taps + j];
        const std::size_t lag = (d.taps - 1 - j) * d.dilation;
        for (std::size_t t = lag; t < d.time; ++t) yrow[t] += wv * xrow[t - lag];
      }
    }
    if (!bias.empty()) {
      for (std::size_t t = 0; t < d.time; ++t) yrow[t] += bias[o];
    }
  }
}

void conv1d_grad_input_accumulate(ConvDims d, std::span<const double> dy,
                                  std::span<const double> w,
                                  std::span<double> dx) {
  const std::size_t jobs = d.series * d.c_in;
  const bool big = jobs * d.time * d.c_out * d.taps >= kMinParallelWork;
#pragma omp parallel if (big)
  {
    std::vector<double> acc(d.time);
#pragma omp for schedule(static)
    for (std::int64_t job = 0; job < as_int(jobs); ++job) {
      const std::size_t s = static_cast<std::size_t>(job) / d.c_in;
      const std::size_t c = static_cast<std::size_t>(job) % d.c_in;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t o = 0; o < d.c_out; ++o) {
        const double* dyrow = dy.data() + (s * d.c_out + o) * d.time;
        for (std::size_t j = 0; j < d.taps; ++j) {
          const double wv = w[(o * d.c_in + c) * d.taps + j];
          const std::size_t lag = (d.taps - 1 - j) * d.dilation;
          for (std::size_t tau = 0; tau + lag < d.time; ++tau) {
            acc[tau] += wv * dyrow[tau + lag];
          }
        }
      }
      double* dxrow = dx.data() + (s * d.c_in + c) * d.time;
      for (std::size_t tau = 0; tau < d.time; ++tau) dxrow[tau] += acc[tau];
    }
  }
}

void conv1d_grad_params_accumulate(ConvDims d, std::span<const double> dy,
                                   std::span<const double> x,
                                   std::span<double> dw,
                                   std::span<double> dbias) {
  const bool big =
      d.c_out * d.c_in * d.taps * d.series * d.time >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t oo = 0; oo < as_int(d.c_out); ++oo) {
    const auto o = static_cast<std::size_t>(oo);
    for (std::size_t c = 0; c < d.c_in; ++c) {
      for (std::size_t j = 0; j < d.taps; ++j) {
        const std::size_t lag = (d.taps - 1 - j) * d.dilation;
        double acc = 0.0;
        for (std::size_t s = 0; s < d.series; ++s) {
          const double* dyrow = dy.data() + (s * d.c_out + o) * d.time;
          const double* xrow = x.data() + (s * d.c_in + c) * d.time;
          for (std::size_t t = lag; t < d.time; ++t) acc += dyrow[t] * xrow[t - lag];
        }
        dw[(o * d.c_in + c) * d.taps + j] += acc;
      }
    }
    if (!dbias.empty()) {
      double acc = 0.0;
      for (std::size_t s = 0; s < d.series; ++s) {
        const double* dyrow = dy.data() + (s * d.c_out + o) * d.time;
        for (std::size_t t = 0; t < d.time; ++t) acc += dyrow[t];
      }
      dbias[o] += acc;
    }
  }
}

void crps_rows(std::size_t rows, std::size_t n, std::span<const double> samples,
               std::span<const double> targets, std::span<double> out) {
  const bool big = rows * n * 8 >= kMinParallelWork;
#pragma omp parallel if (big)
  {
    std::vector<double> sorted(n);
#pragma omp for schedule(static)
    for (std::int64_t rr = 0; rr < as_int(rows); ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      out[r] = detail::crps_row(samples.subspan(r * n, n), targets[r], sorted);
    }
  }
}

void crps_rows_grad_accumulate(std::size_t rows, std::size_t n,
                               std::span<const double> samples,
                               std::span<const double> targets,
                               std::span<const double> upstream,
                               std::span<double> dsamples) {
  const bool big = rows * n * 8 >= kMinParallelWork;
#pragma omp parallel if (big)
  {
    std::vector<double> sorted(n);
#pragma omp for schedule(static)
    for (std::int64_t rr = 0; rr < as_int(rows); ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      detail::crps_row_grad(samples.subspan(r * n, n), targets[r], upstream[r],
                            sorted, dsamples.subspan(r * n, n));
    }
  }
}

double energy(std::size_t n, std::size_t dim, std::span<const double> points,
              std::span<const double> y, double beta) {
  std::vector<double> to_target(n);
  std::vector<double> pairwise(n);
  const bool big = n * n * dim / 2 >= kMinParallelWork;
  // Dynamic schedule: row i has n - i - 1 pairs.
#pragma omp parallel for schedule(dynamic, 8) if (big)
  for (std::int64_t ii = 0; ii < as_int(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const auto pi = points.subspan(i * dim, dim);
    to_target[i] = detail::distance_pow(pi, y, beta);
    double acc = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      acc += detail::distance_pow(pi, points.subspan(j * dim, dim), beta);
    }
    pairwise[i] = acc;
  }
  return detail::energy_combine(to_target, pairwise);
}

void energy_grad_accumulate(std::size_t n, std::size_t dim,
                            std::span<const double> points,
                            std::span<const double> y, double beta,
                            double upstream, std::span<double> dpoints) {
  const bool big = n * n * dim >= kMinParallelWork;
#pragma omp parallel for schedule(static) if (big)
  for (std::int64_t ii = 0; ii < as_int(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    detail::energy_point_grad(n, dim, i, points, y, beta, upstream,
                              dpoints.subspan(i * dim, dim));
  }
}

void quantile_rows(std::size_t rows, std::size_t n,
                   std::span<const double> samples,
                   std::span<const double> levels, std::span<double> out) {
  const bool big = rows * n * 8 >= kMinParallelWork;
#pragma omp parallel if (big)
  {
    std::vector<double> sorted(n);
#pragma omp for schedule(static)
    for (std::int64_t rr = 0; rr < as_int(rows); ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      detail::quantile_row(samples.subspan(r * n, n), levels, sorted,
                           out.subspan(r * levels.size(), levels.size()));
    }
  }
}

}  // namespace parallel
}  // namespace clover::kernels
