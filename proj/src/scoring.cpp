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

#include "clover/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "clover/error.hpp"
#include "clover/factor_model.hpp"
#include "clover/kernels.hpp"

namespace clover {

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("quantile grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0)) {
      throw ConfigError("quantile grid level " + std::to_string(grid[i]) + " outside (0, 1)");
    }
    if (i > 0 && !(grid[i] > grid[i - 1])) {
      throw ConfigError("quantile grid must be strictly increasing");
    }
  }
}

void check_block(const Tensor& targets, const Tensor& samples, const LevelMask& mask,
                 const char* what) {
  if (targets.rank() != 2 || samples.rank() != 3 || samples.dim(0) != targets.dim(0) ||
      samples.dim(1) != targets.dim(1)) {
    throw ShapeError(std::string(what) + ": targets " + shape_string(targets.shape()) +
                     " and samples " + shape_string(samples.shape()) + " disagree");
  }
  if (mask.mask.size() != targets.dim(0)) {
    throw ShapeError(std::string(what) + ": mask '" + mask.name + "' has " +
                     std::to_string(mask.mask.size()) + " rows, expected " +
                     std::to_string(targets.dim(0)));
  }
  if (samples.dim(2) < 2) throw ConfigError(std::string(what) + ": need at least 2 samples");
}

double masked_abs_sum(const Tensor& targets, const LevelMask& mask) {
  const std::size_t nh = targets.dim(1);
  double acc = 0.0;
  for (std::size_t r = 0; r < targets.dim(0); ++r) {
    if (!mask.mask[r]) continue;
    for (std::size_t h = 0; h < nh; ++h) acc += std::abs(targets.at(r, h));
  }
  return acc;
}

}  // namespace

std::vector<double> default_quantile_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

void ScoreConfig::validate() const {
  if (!(beta > 0.0 && beta < 2.0)) {
    throw ConfigError("beta must lie in (0, 2), got " + std::to_string(beta));
  }
  check_grid(quantile_grid);
}

double crps_empirical(double y, std::span<const double> samples) {
  if (samples.size() < 2) throw ConfigError("crps_empirical: need at least 2 samples");
  double out = 0.0;
  const double target[] = {y};
  kernels::serial::crps_rows(1, samples.size(), samples, target, {&out, 1});
  return out;
}

double crps_normal(double y, double mu, double sigma) {
  if (!(sigma > 0.0)) throw ConfigError("crps_normal: sigma must be > 0");
  const double z = (y - mu) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return sigma * (z * (2.0 * cdf - 1.0) + 2.0 * pdf - 1.0 / std::sqrt(std::numbers::pi));
}

double quantile_loss(double y, double q, double pred) {
  if (!(q > 0.0 && q < 1.0)) {
    throw ConfigError("quantile_loss: q = " + std::to_string(q) + " outside (0, 1)");
  }
  return q * std::max(y - pred, 0.0) + (1.0 - q) * std::max(pred - y, 0.0);
}

double crps_from_quantiles(double y, std::span<const double> quantile_values,
                           std::span<const double> grid) {
  if (quantile_values.size() != grid.size()) {
    throw ShapeError("crps_from_quantiles: " + std::to_string(quantile_values.size()) +
                     " values for a grid of " + std::to_string(grid.size()));
  }
  check_grid(grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) acc += quantile_loss(y, grid[i], quantile_values[i]);
  return 2.0 * acc / static_cast<double>(grid.size());
}

double energy_score(std::span<const double> y, const Tensor& samples, double beta) {
  if (!(beta > 0.0 && beta < 2.0)) {
    throw ConfigError("energy_score: beta must lie in (0, 2), got " + std::to_string(beta));
  }
  if (samples.rank() != 2 || samples.dim(0) != y.size()) {
    throw ShapeError("energy_score: samples " + shape_string(samples.shape()) +
                     " for a target of length " + std::to_string(y.size()));
  }
  const std::size_t dim = samples.dim(0);
  const std::size_t n = samples.dim(1);
  if (n < 2) throw ConfigError("energy_score: need at least 2 samples");
  std::vector<double> points(n * dim);
  for (std::size_t d = 0; d < dim; ++d) {
    for (std::size_t i = 0; i < n; ++i) points[i * dim + d] = samples[d * n + i];
  }
  return kernels::parallel::energy(n, dim, points, y, beta);
}

ScoreParts scrps_parts(const Tensor& targets, const Tensor& samples, const LevelMask& mask) {
  check_block(targets, samples, mask, "scrps");
  const std::size_t rows = targets.size();
  const std::size_t ns = samples.dim(2);
  std::vector<double> per_row(rows);
  kernels::parallel::crps_rows(rows, ns, samples.values(), targets.values(), per_row);
  const std::size_t nh = targets.dim(1);
  ScoreParts parts;
  for (std::size_t r = 0; r < targets.dim(0); ++r) {
    if (!mask.mask[r]) continue;
    for (std::size_t h = 0; h < nh; ++h) parts.numerator += per_row[r * nh + h];
  }
  parts.denominator = masked_abs_sum(targets, mask);
  if (parts.denominator == 0.0) {
    throw NumericalError("scrps: level '" + mask.name + "' has zero total |target|");
  }
  return parts;
}

double scrps(const Tensor& targets, const Tensor& samples, const LevelMask& mask) {
  return scrps_parts(targets, samples, mask).value();
}

ScoreParts quantile_crps_parts(const Tensor& targets, const Tensor& samples,
                               const LevelMask& mask, std::span<const double> grid) {
  check_block(targets, samples, mask, "quantile loss");
  check_grid(grid);
  const std::size_t rows = targets.size();
  std::vector<double> quants(rows * grid.size());
  kernels::parallel::quantile_rows(rows, samples.dim(2), samples.values(), grid, quants);
  const std::size_t nh = targets.dim(1);
  ScoreParts parts;
  for (std::size_t r = 0; r < targets.dim(0); ++r) {
    if (!mask.mask[r]) continue;
    for (std::size_t h = 0; h < nh; ++h) {
      const std::size_t row = r * nh + h;
      parts.numerator += crps_from_quantiles(
          targets[row], std::span<const double>(quants).subspan(row * grid.size(), grid.size()),
          grid);
    }
  }
  parts.denominator = masked_abs_sum(targets, mask);
  if (parts.denominator == 0.0) {
    throw NumericalError("quantile loss: level '" + mask.name + "' has zero total |target|");
  }
  return parts;
}

ScoreParts rel_se_parts(const Tensor& targets, const Tensor& mean_forecast,
                        std::span<const double> last_observation, const LevelMask& mask) {
  if (targets.rank() != 2 || mean_forecast.shape() != targets.shape() ||
      last_observation.size() != targets.dim(0) || mask.mask.size() != targets.dim(0)) {
    throw ShapeError("rel_se: targets " + shape_string(targets.shape()) + ", forecast " +
                     shape_string(mean_forecast.shape()) + ", " +
                     std::to_string(last_observation.size()) + " last observations");
  }
  const std::size_t nh = targets.dim(1);
  ScoreParts parts;
  for (std::size_t r = 0; r < targets.dim(0); ++r) {
    if (!mask.mask[r]) continue;
    for (std::size_t h = 0; h < nh; ++h) {
      const double e = targets.at(r, h) - mean_forecast.at(r, h);
      const double naive = targets.at(r, h) - last_observation[r];
      parts.numerator += e * e;
      parts.denominator += naive * naive;
    }
  }
  if (parts.denominator == 0.0) {
    throw NumericalError("rel_se: level '" + mask.name +
                         "' has zero naive error (series constant over the horizon)");
  }
  return parts;
}

double rel_se(const Tensor& targets, const Tensor& mean_forecast,
              std::span<const double> last_observation, const LevelMask& mask) {
  return rel_se_parts(targets, mean_forecast, last_observation, mask).value();
}

std::string metric_name(Metric metric) {
  switch (metric) {
    case Metric::kScrps: return "scrps";
    case Metric::kRelSe: return "relse";
    case Metric::kQuantileLoss: return "ql";
  }
  return "unknown";
}

Metric parse_metric(const std::string& name) {
  if (name == "scrps") return Metric::kScrps;
  if (name == "relse") return Metric::kRelSe;
  if (name == "ql") return Metric::kQuantileLoss;
  throw ConfigError("unknown metric '" + name + "' (expected scrps, relse or ql)");
}

EvaluationReport evaluate_report(Metric metric, const EvaluationInputs& inputs,
                                 const std::vector<LevelMask>& masks, const ScoreConfig& config) {
  if (inputs.targets == nullptr || inputs.samples == nullptr) {
    throw ConfigError("evaluate_report: targets and samples are required");
  }
  const Tensor& targets = *inputs.targets;
  const Tensor& samples = *inputs.samples;
  EvaluationReport report{metric, {}, 0.0, samples.rank() == 3 ? samples.dim(2) : 0, inputs.seed};
  Tensor mean;
  if (metric == Metric::kRelSe) mean = sample_mean(samples);
  auto score = [&](const LevelMask& mask) {
    switch (metric) {
      case Metric::kScrps: return scrps(targets, samples, mask);
      case Metric::kQuantileLoss:
        return quantile_crps_parts(targets, samples, mask, config.quantile_grid).value();
      case Metric::kRelSe: return rel_se(targets, mean, inputs.last_observation, mask);
    }
    return 0.0;
  };
  for (const auto& mask : masks) report.per_level.emplace_back(mask.name, score(mask));
  report.overall = score(overall_mask(targets.dim(0)));
  return report;
}

double pit_value(double y, std::span<const double> samples, double u) {
  if (samples.empty()) throw ConfigError("pit_value: no samples");
  std::size_t less = 0;
  std::size_t equal = 0;
  for (double x : samples) {
    less += x < y;
    equal += x == y;
  }
  return (static_cast<double>(less) + u * static_cast<double>(equal)) /
         static_cast<double>(samples.size());
}

double ks_uniform_distance(std::vector<double> values) {
  if (values.empty()) throw ConfigError("ks_uniform_distance: no values");
  std::sort(values.begin(), values.end());
  const double n = static_cast<double>(values.size());
  double d = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = std::clamp(values[i], 0.0, 1.0);
    d = std::max({d, (static_cast<double>(i) + 1.0) / n - v, v - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace clover
