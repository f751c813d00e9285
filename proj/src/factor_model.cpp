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

#include "clover/factor_model.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <string>

#include "clover/error.hpp"
#include "clover/kernels.hpp"
#include "clover/ops.hpp"

namespace clover {

void FactorParams::validate() const {
  const Shape& sm = mu.shape();
  if (sm.size() != 2) throw ShapeError("factor params: mu must be [N_b, N_h], got " + shape_string(sm));
  if (sigma.shape() != sm) {
    throw ShapeError("factor params: sigma " + shape_string(sigma.shape()) + " vs mu " +
                     shape_string(sm));
  }
  const Shape& sf = loadings.shape();
  if (sf.size() != 3 || sf[0] != sm[0] || sf[2] != sm[1]) {
    throw ShapeError("factor params: loadings " + shape_string(sf) + " must be [N_b, N_k, N_h]");
  }
  for (double v : sigma.value().values()) {
    if (!(v > 0.0)) throw NumericalError("factor params: sigma must be > 0, found " + std::to_string(v));
  }
}

NoiseDraws draw_noise(std::size_t n_bottom, std::size_t n_factors, std::size_t horizon,
                      std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw ConfigError("draw_noise: sample count must be >= 1");
  if (n_bottom == 0 || horizon == 0) throw ConfigError("draw_noise: N_b and N_h must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  NoiseDraws noise{Tensor(Shape{n_bottom, horizon, n_samples}),
                   Tensor(Shape{n_factors, horizon, n_samples}), seed};
  for (double& v : noise.z.values()) v = normal(rng);
  for (double& v : noise.eps.values()) v = normal(rng);
  return noise;
}

Var aggregate(const AggregationMatrix& s, const Var& bottom) {
  Tensor out = aggregate(s, bottom.value());
  Tape& tape = bottom.tape();
  const Var parents[] = {bottom};
  const std::size_t inner = bottom.size() / s.n_bottom();
  const kernels::MatmulDims d{s.rows(), s.n_bottom(), inner};
  return tape.record(std::move(out), parents,
                     [&tape, smat = s.matrix(), bottom, d](std::span<const double> up) {
                       // d/d bottom = S^T * up
                       kernels::parallel::matmul_grad_b_accumulate(
                           d, smat.values(), up, tape.grad_buffer(bottom.id()));
                     });
}

SampleSet sample(const FactorParams& params, const NoiseDraws& noise, const AggregationMatrix& s) {
  params.validate();
  const std::size_t nb = params.n_bottom();
  const std::size_t nh = params.horizon();
  const std::size_t nk = params.n_factors();
  if (noise.z.shape() != Shape{nb, nh, noise.z.dim(2)} ||
      noise.eps.shape() != Shape{nk, nh, noise.z.dim(2)}) {
    throw ShapeError("sample: noise z " + shape_string(noise.z.shape()) + " / eps " +
                     shape_string(noise.eps.shape()) + " do not match params with N_b=" +
                     std::to_string(nb) + ", N_k=" + std::to_string(nk) + ", N_h=" + std::to_string(nh));
  }
  if (s.cols() != nb) {
    throw ShapeError("sample: aggregation matrix has " + std::to_string(s.cols()) +
                     " columns for " + std::to_string(nb) + " bottom series");
  }
  const std::size_t ns = noise.n_samples();
  Tape& tape = params.mu.tape();

  // [N_b, N_h] -> [N_b, N_h, N_s]
  auto spread = [ns](const Var& v) {
    return repeat(reshape(v, {v.shape()[0], v.shape()[1], 1}), 2, ns);
  };
  Var raw = spread(params.mu) + spread(params.sigma) * tape.constant(noise.z);
  if (nk > 0) {
    // F[b,k,h] eps[k,h,s] as a batch over h of [N_b,N_k] x [N_k,N_s].
    static constexpr std::array<std::size_t, 3> kHbk{2, 0, 1};
    static constexpr std::array<std::size_t, 3> kHks{1, 0, 2};
    static constexpr std::array<std::size_t, 3> kBhs{1, 0, 2};
    Var loaded = matmul(permute(params.loadings, kHbk), permute(tape.constant(noise.eps), kHks));
    raw = raw + permute(loaded, kBhs);
  }
  Var coherent = aggregate(s, relu(raw));
  return SampleSet{raw, coherent, noise};
}

Tensor implied_covariance(const FactorParams& params, std::size_t horizon) {
  const std::size_t nb = params.n_bottom();
  const std::size_t nh = params.horizon();
  const std::size_t nk = params.n_factors();
  if (horizon < 1 || horizon > nh) {
    throw ConfigError("implied_covariance: horizon " + std::to_string(horizon) + " outside [1, " +
                      std::to_string(nh) + "]");
  }
  const std::size_t h = horizon - 1;
  const Tensor& sigma = params.sigma.value();
  const Tensor& f = params.loadings.value();
  Tensor cov(Shape{nb, nb});
  for (std::size_t i = 0; i < nb; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < nk; ++k) acc += f.at(i, k, h) * f.at(j, k, h);
      if (i == j) acc += sigma.at(i, h) * sigma.at(i, h);
      cov.at(i, j) = acc;
    }
  }
  return cov;
}

Tensor empirical_quantiles(const Tensor& samples, std::span<const double> levels) {
  if (samples.rank() != 3) {
    throw ShapeError("empirical_quantiles: samples must be [rows, N_h, N_s], got " +
                     shape_string(samples.shape()));
  }
  if (samples.dim(2) < 2) throw ConfigError("empirical_quantiles: need at least 2 samples");
  for (double q : levels) {
    if (!(q > 0.0 && q < 1.0)) {
      throw ConfigError("empirical_quantiles: level " + std::to_string(q) + " outside (0, 1)");
    }
  }
  const std::size_t rows = samples.dim(0) * samples.dim(1);
  Tensor out(Shape{samples.dim(0), samples.dim(1), levels.size()});
  kernels::parallel::quantile_rows(rows, samples.dim(2), samples.values(), levels, out.values());
  return out;
}

Tensor sample_mean(const Tensor& samples) {
  if (samples.rank() != 3 || samples.dim(2) == 0) {
    throw ShapeError("sample_mean: samples must be [rows, N_h, N_s], got " +
                     shape_string(samples.shape()));
  }
  const std::size_t ns = samples.dim(2);
  Tensor out(Shape{samples.dim(0), samples.dim(1)});
  for (std::size_t r = 0; r < out.size(); ++r) {
    double acc = 0.0;
    for (std::size_t s = 0; s < ns; ++s) acc += samples[r * ns + s];
    out[r] = acc / static_cast<double>(ns);
  }
  return out;
}

}  // namespace clover
