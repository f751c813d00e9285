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
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "clover/data.hpp"
#include "clover/losses.hpp"
#include "clover/network.hpp"
#include "clover/tensor.hpp"

namespace clover {

struct TrainConfig {
  Objective objective = Objective::kCrps;
  double learning_rate = 5e-3;
  std::size_t max_steps = 2000;
  int patience = 5;  // evaluations without improvement; -1 disables
  std::size_t n_mc_samples = 100;
  std::size_t eval_every = 100;
  std::size_t eval_samples = 200;
  std::uint64_t seed = 1;
  std::uint64_t eval_seed = 20240501;
  std::size_t lr_decimations = 4;
  LossConfig loss;

  void validate() const;
};

/// lr0 * 0.1^floor(decimations * step / max_steps), step counted from 0.
double learning_rate_at(const TrainConfig& config, std::size_t step);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// One bias-corrected Adam update from each tensor's grad(). Tensors
/// without a gradient are treated as having a zero gradient. A non-finite
/// gradient throws NumericalError before anything is modified.
void adam_step(std::span<Tensor* const> params, AdamState& state, double lr,
               std::span<const std::string> names = {});
void adam_step(NetworkParams& params, AdamState& state, double lr);

/// Everything needed to forecast: architecture, features, hierarchy, the
/// training-span scale and the weights.
struct Model {
  NetworkConfig network;
  FeatureConfig features;
  InputDims dims;
  HierarchySpec hierarchy;
  Tensor scale;  // [N_b]
  NetworkParams params;
};

struct HistoryRow {
  std::size_t step = 0;  // 1-based count of completed steps
  double train_loss = 0.0;
  double val_scrps = 0.0;  // NaN when not evaluated at this step
  double lr = 0.0;
};

struct TrainResult {
  Model model;  // best-validation weights
  std::vector<HistoryRow> history;
  double best_val_scrps = 0.0;
  std::size_t best_step = 0;
  std::size_t steps_run = 0;
  bool early_stopped = false;
};

/// Called after each step; return false to stop.
using StepCallback = std::function<bool(const HistoryRow&)>;

/// Per step: a uniform forecast-creation date from the training span, fresh
/// noise, the configured loss, backward and an Adam step. Validation sCRPS
/// (fixed eval seed) every `eval_every` steps and at the last step; the best
/// weights are kept.
TrainResult train(const HierDataset& dataset, const NetworkConfig& network,
                  const FeatureConfig& features, const TrainConfig& config,
                  const StepCallback& on_step = {});

/// Coherent forecast samples for the window ending at `end`,
/// [N_a + N_b, N_h, n_samples].
Tensor forecast_samples(const Model& model, const WindowMaker& windows, std::size_t end,
                        std::size_t n_samples, std::uint64_t seed);

/// FactorParams values (no tape) for the window ending at `end`.
struct FactorValues {
  Tensor mu;        // [N_b, N_h]
  Tensor sigma;     // [N_b, N_h]
  Tensor loadings;  // [N_b, N_k, N_h]
};
FactorValues forecast_params(const Model& model, const WindowMaker& windows, std::size_t end);

}  // namespace clover
