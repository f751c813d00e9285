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

#include "clover/baselines.hpp"

#include <algorithm>
#include <random>

#include "clover/error.hpp"

namespace clover {

namespace {

void check_history(const DatasetView& history, const AggregationMatrix& s, const char* what) {
  if (history.data == nullptr) throw DataError(std::string(what) + ": no dataset");
  if (history.data->n_bottom() != s.n_bottom()) {
    throw ShapeError(std::string(what) + ": dataset has " +
                     std::to_string(history.data->n_bottom()) + " series, hierarchy " +
                     std::to_string(s.n_bottom()));
  }
}

}  // namespace

Tensor naive_forecast(const DatasetView& history, const AggregationMatrix& s,
                      std::size_t horizon) {
  check_history(history, s, "naive_forecast");
  if (history.length() == 0) throw DataError("naive_forecast: empty history");
  const std::size_t nb = s.n_bottom();
  Tensor bottom(Shape{nb, horizon});
  for (std::size_t b = 0; b < nb; ++b) {
    const double last = history.value(b, history.length() - 1);
    for (std::size_t h = 0; h < horizon; ++h) bottom.at(b, h) = last;
  }
  return aggregate(s, bottom);
}

Tensor seasonal_naive_empirical(const DatasetView& history, const AggregationMatrix& s,
                                std::size_t horizon, std::size_t period,
                                std::size_t n_samples, std::uint64_t seed) {
  check_history(history, s, "seasonal_naive_empirical");
  if (period == 0) throw ConfigError("seasonal_naive_empirical: period must be >= 1");
  if (n_samples == 0) throw ConfigError("seasonal_naive_empirical: sample count must be >= 1");
  const std::size_t len = history.length();
  if (len < 2 * period) {
    throw DataError("seasonal_naive_empirical: " + std::to_string(len) +
                    " steps of history, need 2 periods (" + std::to_string(2 * period) + ")");
  }
  const std::size_t nb = s.n_bottom();
  const std::size_t n_resid = len - period;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n_resid - 1);
  std::vector<std::size_t> draw(horizon * n_samples);
  for (auto& d : draw) d = period + pick(rng);

  Tensor bottom(Shape{nb, horizon, n_samples});
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t h = 0; h < horizon; ++h) {
      const double point = history.value(b, len - period + (h % period));
      for (std::size_t i = 0; i < n_samples; ++i) {
        const std::size_t t = draw[h * n_samples + i];
        bottom.at(b, h, i) = point + history.value(b, t) - history.value(b, t - period);
      }
    }
  }
  return bottom_up(bottom, s, true);
}

Tensor bottom_up(const Tensor& bottom, const AggregationMatrix& s, bool clip) {
  if (!clip) return aggregate(s, bottom);
  Tensor clipped = bottom;
  for (double& v : clipped.values()) v = std::max(v, 0.0);
  return aggregate(s, clipped);
}

}  // namespace clover
