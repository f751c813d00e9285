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

// Per-row building blocks shared by the serial and parallel kernel sets. The
// two sets only differ in how rows/points are distributed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace clover::kernels::detail {

// Fair CRPS: mean |x_i - y| - sum_{i,j} |x_i - x_j| / (2 n (n - 1)).
// The pairwise sum uses the sorted-order identity
// sum_{i<j} (x_(j) - x_(i)) = sum_i (2i - n + 1) x_(i).
inline double crps_row(std::span<const double> x, double y,
                       std::vector<double>& sorted) {
  const std::size_t n = x.size();
  double to_target = 0.0;
  for (double v : x) to_target += std::abs(v - y);
  sorted.assign(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  double pairwise = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    pairwise += (2.0 * static_cast<double>(i) - static_cast<double>(n) + 1.0) *
                sorted[i];
  }
  const double nd = static_cast<double>(n);
  return to_target / nd - pairwise / (nd * (nd - 1.0));
}

inline double sign(double v) { return (v > 0.0) - (v < 0.0); }

inline void crps_row_grad(std::span<const double> x, double y, double upstream,
                          std::vector<double>& sorted, std::span<double> dx) {
  const std::size_t n = x.size();
  sorted.assign(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  const double nd = static_cast<double>(n);
  const double pair_scale = 1.0 / (nd * (nd - 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto lo = std::lower_bound(sorted.begin(), sorted.end(), x[i]);
    const auto hi = std::upper_bound(lo, sorted.end(), x[i]);
    const double less = static_cast<double>(lo - sorted.begin());
    const double greater = static_cast<double>(sorted.end() - hi);
    const double g = sign(x[i] - y) / nd - (less - greater) * pair_scale;
    dx[i] += upstream * g;
  }
}

inline double distance_pow(std::span<const double> a, std::span<const double> b,
                           double beta) {
  if (a.size() == 1) return std::pow(std::abs(a[0] - b[0]), beta);
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sq += d * d;
  }
  return std::pow(std::sqrt(sq), beta);
}

inline double energy_combine(std::span<const double> to_target,
                             std::span<const double> pairwise) {
  const double nd = static_cast<double>(to_target.size());
  double a = 0.0;
  double b = 0.0;
  for (double v : to_target) a += v;
  for (double v : pairwise) b += v;
  return a / nd - b / (nd * (nd - 1.0));
}

// Adds beta * |d|^(beta-2) * d * scale into g, where d = a - b. Zero at d = 0.
inline void add_norm_pow_grad(std::span<const double> a, std::span<const double> b,
                              double beta, double scale, std::span<double> g) {
  double sq = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    sq += d * d;
  }
  if (sq == 0.0) return;
  const double coef = beta * std::pow(std::sqrt(sq), beta - 2.0) * scale;
  for (std::size_t k = 0; k < a.size(); ++k) g[k] += coef * (a[k] - b[k]);
}

inline void energy_point_grad(std::size_t n, std::size_t dim, std::size_t i,
                              std::span<const double> points,
                              std::span<const double> y, double beta,
                              double upstream, std::span<double> dpoint) {
  const double nd = static_cast<double>(n);
  const auto pi = points.subspan(i * dim, dim);
  std::vector<double> g(dim, 0.0);
  add_norm_pow_grad(pi, y, beta, 1.0 / nd, g);
  const double pair_scale = -1.0 / (nd * (nd - 1.0));
  for (std::size_t j = 0; j < n; ++j) {
    if (j == i) continue;
    add_norm_pow_grad(pi, points.subspan(j * dim, dim), beta, pair_scale, g);
  }
  for (std::size_t k = 0; k < dim; ++k) dpoint[k] += upstream * g[k];
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
inline void quantile_row(std::span<const double> x, std::span<const double> levels,
                         std::vector<double>& sorted, std::span<double> out) {
  const std::size_t n = x.size();
  sorted.assign(x.begin(), x.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t q = 0; q < levels.size(); ++q) {
    const double h = static_cast<double>(n - 1) * levels[q];
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, n - 1);
    out[q] = sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  }
}

}  // namespace clover::kernels::detail
