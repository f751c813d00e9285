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
#include <string>
#include <utility>
#include <vector>

#include "clover/hierarchy.hpp"
#include "clover/tensor.hpp"

namespace clover {

// How the energy score groups the [rows, N_h] forecast block into vectors.
enum class EnergyNorm {
  kJoint,       // one vector of length rows * N_h
  kPerSeries,   // one vector per row, over horizons
  kPerHorizon,  // one vector per horizon, over rows
};

std::vector<double> default_quantile_grid();  // 0.01, 0.02, ..., 0.99

struct ScoreConfig {
  double beta = 1.0;
  std::vector<double> quantile_grid = default_quantile_grid();
  EnergyNorm energy_norm = EnergyNorm::kJoint;

  void validate() const;
};

/// Fair Monte Carlo CRPS estimator
///   (1/N) sum |x_i - y| - 1/(2N(N-1)) sum_{i,j} |x_i - x_j|.
/// Unbiased for the CRPS of the sampled distribution; can be slightly
/// negative for a single draw. Needs N >= 2.
double crps_empirical(double y, std::span<const double> samples);

/// Closed-form CRPS of N(mu, sigma^2) at y. Test oracle.
double crps_normal(double y, double mu, double sigma);

double quantile_loss(double y, double q, double pred);

/// 2 * mean over the grid of quantile_loss (rectangle rule). Non-monotone
/// quantiles are scored as given.
double crps_from_quantiles(double y, std::span<const double> quantile_values,
                           std::span<const double> grid);

/// Energy score with the same fair pairwise normalization as
/// crps_empirical. `samples` is [dim, N].
double energy_score(std::span<const double> y, const Tensor& samples, double beta);

/// A ratio metric kept as its two sums so level contributions can be added.
struct ScoreParts {
  double numerator = 0.0;
  double denominator = 0.0;
  double value() const { return numerator / denominator; }
};

/// Scaled CRPS over the rows selected by `mask`. targets [rows, N_h], samples
/// [rows, N_h, N_s]. Throws NumericalError when the masked sum of |y| is 0.
ScoreParts scrps_parts(const Tensor& targets, const Tensor& samples, const LevelMask& mask);
double scrps(const Tensor& targets, const Tensor& samples, const LevelMask& mask);

/// Scaled quantile-grid CRPS: like scrps but each CRPS is computed from the
/// empirical quantiles at `grid`.
ScoreParts quantile_crps_parts(const Tensor& targets, const Tensor& samples,
                               const LevelMask& mask, std::span<const double> grid);

/// Squared error of `mean_forecast` relative to repeating the last observed
/// value of each row. Throws NumericalError on a zero naive error.
ScoreParts rel_se_parts(const Tensor& targets, const Tensor& mean_forecast,
                        std::span<const double> last_observation, const LevelMask& mask);
double rel_se(const Tensor& targets, const Tensor& mean_forecast,
              std::span<const double> last_observation, const LevelMask& mask);

enum class Metric { kScrps, kRelSe, kQuantileLoss };

std::string metric_name(Metric metric);
// Accepts scrps, relse, ql. Throws ConfigError otherwise.
Metric parse_metric(const std::string& name);

struct EvaluationReport {
  Metric metric = Metric::kScrps;
  std::vector<std::pair<std::string, double>> per_level;
  double overall = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

struct EvaluationInputs {
  const Tensor* targets = nullptr;           // [rows, N_h]
  const Tensor* samples = nullptr;           // [rows, N_h, N_s]
  std::span<const double> last_observation;  // [rows]; needed for relSE
  std::uint64_t seed = 0;
};

EvaluationReport evaluate_report(Metric metric, const EvaluationInputs& inputs,
                                 const std::vector<LevelMask>& masks,
                                 const ScoreConfig& config = {});

/// Forecast CDF at y estimated from samples: (#{x < y} + u * #{x == y}) / N,
/// with u in [0, 1] breaking ties at point masses.
double pit_value(double y, std::span<const double> samples, double u = 0.5);

/// Kolmogorov-Smirnov distance between the empirical CDF of `values` and
/// Uniform(0, 1).
double ks_uniform_distance(std::vector<double> values);

}  // namespace clover
