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

#include <string>
#include <string_view>

#include "clover/data.hpp"
#include "clover/network.hpp"
#include "clover/training.hpp"

namespace clover {

/// Everything a training run needs besides data, read from flat
/// `key = value` text. Hyperparameter keys follow the usual table names
/// in snake case, e.g.
///
///   temporal_convolution_channel_size = 10
///   factor_model_components = 10
///   cross_series_mlp_hidden_size = 200
///   sgd_max_steps = 2000
///   early_stop_patience_steps = 5
///   learning_rate = 5e-3
///
/// Unknown keys are an error. Missing keys keep their defaults.
struct RunConfig {
  NetworkConfig network;
  FeatureConfig features;
  TrainConfig train;
  Frequency frequency = Frequency::kDaily;

  void validate() const;
};

RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);
// Every key, resolved; parse_run_config(format_run_config(c)) == c.
std::string format_run_config(const RunConfig& config);

}  // namespace clover
