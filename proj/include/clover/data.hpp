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
#include <vector>

#include "clover/hierarchy.hpp"
#include "clover/network.hpp"
#include "clover/tensor.hpp"

namespace clover {

enum class Frequency { kDaily, kWeekly, kMonthly, kQuarterly };

std::string frequency_name(Frequency frequency);
// Accepts daily, weekly, monthly, quarterly. Throws ConfigError otherwise.
Frequency parse_frequency(const std::string& name);
// 7, 52, 12, 4
std::size_t season_length(Frequency frequency);

/// Bottom-level targets plus features, all aligned on one timeline.
struct HierDataset {
  HierarchySpec hierarchy;
  Tensor values;                        // [N_b, T]
  std::vector<std::string> timestamps;  // ascending, length T
  Frequency frequency = Frequency::kDaily;
  std::vector<std::string> covariate_names;
  Tensor covariates;       // [N_b, F_c, T], known in advance; F_c may be 0
  Tensor static_features;  // [N_b, F_s]

  std::size_t n_bottom() const { return values.dim(0); }
  std::size_t length() const { return values.dim(1); }
  double value(std::size_t b, std::size_t t) const { return values.at(b, t); }
};

/// Long-format CSV: header `unique_id,ds,y[,covariate...]`. `ds` is either
/// an ISO date (YYYY-MM-DD) or an integer index. The optional static file
/// has header `unique_id,feature...` with one row per bottom id; without it
/// every series gets a single constant static feature.
HierDataset parse_csv(std::string_view data_text, const HierarchySpec& spec,
                      Frequency frequency, std::string_view static_text = {});
HierDataset load_csv(const std::string& data_path, const std::string& hierarchy_path,
                     Frequency frequency, const std::string& static_path = {});

std::string format_csv(const HierDataset& dataset);
void export_csv(const HierDataset& dataset, const std::string& path);

struct CalendarFeatures {
  Tensor dummies;  // [P, T], one hot per step
  Tensor anchor;   // [N_b, T], y[t - P] with y[0] for t < P; empty if not requested
};

/// Seasonal dummies: weekday for daily, week of year (52) for weekly, month
/// for monthly, quarter for quarterly. Integer timestamps use index mod P.
CalendarFeatures make_calendar_features(std::span<const std::string> timestamps,
                                        Frequency frequency, const Tensor* values = nullptr);

struct SplitSpec {
  std::size_t horizon = 0;
};

/// A contiguous time range [begin, end) of a dataset. Does not own data.
struct DatasetView {
  const HierDataset* data = nullptr;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - begin; }
  // t relative to begin
  double value(std::size_t b, std::size_t t) const { return data->value(b, begin + t); }
};

struct Splits {
  DatasetView train;
  DatasetView validation;
  DatasetView test;
};

/// test = last N_h steps, validation = the N_h before, train = the rest.
/// Throws DataError when T < 3 * N_h.
Splits split(const HierDataset& dataset, const SplitSpec& spec);

/// Mean |y| per bottom series over the view; 1 where that mean is 0.
Tensor series_scale(const DatasetView& view);

struct FeatureConfig {
  std::size_t lookback = 64;
  bool seasonal_anchor = true;
  std::size_t season_length = 0;  // 0 = from the dataset frequency
};

/// Dataset bound to a feature layout, horizon and scale; cuts model windows.
///
/// A window ending at `end` sees history [end - lookback, end) and forecasts
/// [end, end + N_h). Historical channels: target, seasonal dummies,
/// covariates. Future channels: seasonal dummies, seasonal-naive anchor
/// (divided by scale), covariates.
class WindowMaker {
 public:
  WindowMaker(const HierDataset& dataset, const FeatureConfig& features, std::size_t horizon,
              Tensor scale);

  const HierDataset& dataset() const { return *data_; }
  const AggregationMatrix& aggregation() const { return s_; }
  const Tensor& scale() const { return scale_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t period() const { return period_; }
  InputDims dims() const;

  // Smallest valid `end`.
  std::size_t first_end() const;

  FeatureBundle window(std::size_t end) const;
  // [N_a + N_b, N_h] aggregated targets for [end, end + N_h).
  Tensor targets(std::size_t end) const;
  // [N_a + N_b] aggregated value at end - 1.
  std::vector<double> last_observation(std::size_t end) const;

 private:
  const HierDataset* data_;
  FeatureConfig features_;
  std::size_t horizon_;
  Tensor scale_;
  AggregationMatrix s_;
  std::size_t period_;
  Tensor dummies_;  // [P, T]
};

struct SyntheticConfig {
  std::size_t n_bottom = 8;
  std::size_t length = 512;
  std::size_t n_factors = 1;
  std::uint64_t seed = 1;
  std::size_t period = 7;
  double level_min = 0.5;
  double level_max = 6.0;
  double amplitude = 1.0;
  double ar = 0.5;
  double noise_scale = 1.0;
  double loading = 1.0;
};

/// Generator output with the parameters needed by oracle checks.
struct SyntheticDataset {
  HierDataset data;
  SyntheticConfig config;
  std::vector<double> levels;      // [N_b]
  std::vector<double> amplitudes;  // [N_b]
  std::vector<double> phases;      // [N_b]
  Tensor loadings;                 // [N_b, N_k]

  // key = value description of the generator, for a sidecar file.
  std::string metadata() const;
};

/// y[b,t] = max(0, level_b + amplitude_b sin(2 pi t / period + phase_b)
///                 + u[b,t] + sum_k L[b,k] f[k,t]),
/// u AR(1) with coefficient `ar` and innovation scale `noise_scale`, f iid
/// standard normal. Hierarchy: total, two halves (H1, H2), bottom. Daily
/// dates from 2020-01-01; static features are a one-hot of the series.
SyntheticDataset make_synthetic(const SyntheticConfig& config);
SyntheticDataset make_synthetic(std::size_t n_bottom, std::size_t length, std::size_t n_factors,
                                std::uint64_t seed);

}  // namespace clover
