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
#include <cstdint>
#include <span>

#include "clover/hierarchy.hpp"
#include "clover/tensor.hpp"

namespace clover {

/// Gaussian factor output distribution for one forecast creation date.
///
/// Bottom series b at horizon h is mu + sigma * z + sum_k F[b,k,h] * eps[k],
/// with eps shared by every bottom series. Shapes: mu, sigma [N_b, N_h];
/// loadings [N_b, N_k, N_h]. All three live on the same tape.
struct FactorParams {
  Var mu;
  Var sigma;
  Var loadings;

  std::size_t n_bottom() const { return mu.shape()[0]; }
  std::size_t horizon() const { return mu.shape()[1]; }
  std::size_t n_factors() const { return loadings.shape()[1]; }

  // Throws ShapeError on inconsistent shapes and NumericalError on sigma <= 0.
  void validate() const;
};

/// Standard-normal draws: z [N_b, N_h, N_s] idiosyncratic, eps [N_k, N_h, N_s]
/// shared across bottom series. z is drawn first, then eps, from one
/// mt19937_64 stream seeded with `seed`.
struct NoiseDraws {
  Tensor z;
  Tensor eps;
  std::uint64_t seed = 0;

  std::size_t n_samples() const { return z.shape()[2]; }
};

NoiseDraws draw_noise(std::size_t n_bottom, std::size_t n_factors, std::size_t horizon,
                      std::size_t n_samples, std::uint64_t seed);

/// Samples before and after clipping + coherent aggregation.
/// bottom_raw [N_b, N_h, N_s]; coherent [N_a + N_b, N_h, N_s].
struct SampleSet {
  Var bottom_raw;
  Var coherent;
  NoiseDraws noise;
};

/// Differentiable S * v along the leading axis of `bottom` ([N_b, ...]).
/// Uses hierarchy::aggregate for the forward values.
Var aggregate(const AggregationMatrix& s, const Var& bottom);

/// Reparameterized sampling: coherent = S * relu(mu + sigma*z + F*eps).
/// Gradients reach mu, sigma, F; the noise is constant.
SampleSet sample(const FactorParams& params, const NoiseDraws& noise,
                 const AggregationMatrix& s);

/// Diag(sigma^2) + F F^T at horizon `horizon` (1-based), as [N_b, N_b].
Tensor implied_covariance(const FactorParams& params, std::size_t horizon);

/// Type-7 empirical quantiles of samples [rows, N_h, N_s] at each level;
/// result [rows, N_h, levels.size()].
Tensor empirical_quantiles(const Tensor& samples, std::span<const double> levels);

/// Per-(row, horizon) sample mean, [rows, N_h].
Tensor sample_mean(const Tensor& samples);

}  // namespace clover
