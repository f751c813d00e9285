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

#include "clover/data.hpp"
#include "clover/hierarchy.hpp"
#include "clover/tensor.hpp"

namespace clover {

/// Last observed value of `history`, repeated over the horizon, for every
/// hierarchy row. [N_a + N_b, N_h].
Tensor naive_forecast(const DatasetView& history, const AggregationMatrix& s,
                      std::size_t horizon);

/// Seasonal-naive point forecast plus bootstrapped in-sample seasonal-naive
/// residuals, clipped at 0 and aggregated. One residual time index is drawn
/// per (horizon, sample) and shared by all series, which keeps their
/// cross-correlation. [N_a + N_b, N_h, N_s]. Needs 2 full periods.
Tensor seasonal_naive_empirical(const DatasetView& history, const AggregationMatrix& s,
                                std::size_t horizon, std::size_t period,
                                std::size_t n_samples, std::uint64_t seed);

/// S * samples along the leading axis, optionally clipping at 0 first.
/// bottom [N_b, ...].
Tensor bottom_up(const Tensor& bottom, const AggregationMatrix& s, bool clip = true);

}  // namespace clover
