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
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clover/factor_model.hpp"
#include "clover/hierarchy.hpp"
#include "clover/tensor.hpp"

namespace clover {

/// Architecture hyperparameters. Activations are rectifiers throughout.
struct NetworkConfig {
  std::vector<std::size_t> dilations{1, 7, 14, 28};
  std::size_t kernel_size = 2;
  std::size_t conv_channels = 10;
  std::size_t static_dim = 5;
  std::size_t future_dim = 20;
  std::size_t horizon_agnostic_dim = 20;
  std::size_t horizon_specific_dim = 5;
  std::size_t cross_series_hidden = 0;  // 0 disables the cross-series MLP
  std::size_t n_factors = 10;
  std::size_t horizon = 7;

  void validate() const;

  // Shortest history the conv stack can see end to end.
  std::size_t receptive_field() const;
};

/// Sizes that come from the data rather than the config.
struct InputDims {
  std::size_t n_series = 0;  // N_a + N_b
  std::size_t n_bottom = 0;
  std::size_t historical_channels = 0;
  std::size_t future_channels = 0;
  std::size_t static_channels = 0;

  bool operator==(const InputDims&) const = default;
};

/// Model inputs for one forecast creation date.
///
/// `historical` holds the target (in target units) on `target_channel`;
/// every other channel and all of `future` / `statics` are model-ready.
/// `scale` is the per-bottom-series unit: the target channel is divided by
/// it (aggregate rows by the sum of member scales) and the outputs are
/// multiplied by it.
struct FeatureBundle {
  Tensor historical;  // [N_b, F_h, T]
  Tensor future;      // [N_b, F_f, N_h]
  Tensor statics;     // [N_b, F_s]
  Tensor scale;       // [N_b]
  std::size_t target_channel = 0;

  std::size_t n_bottom() const { return historical.dim(0); }
  std::size_t history_length() const { return historical.dim(2); }

  // Throws ShapeError when the parts disagree with each other or with `dims`.
  void validate(const InputDims& dims, std::size_t horizon) const;
};

/// Named learnable tensors in a fixed order.
class NetworkParams {
 public:
  void add(std::string name, Tensor value);

  Tensor& operator[](const std::string& name);
  const Tensor& operator[](const std::string& name) const;
  bool contains(const std::string& name) const { return index_.contains(name); }

  std::size_t size() const { return entries_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }

  void zero_grad();

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Weights uniform in +-1/sqrt(fan_in), biases likewise.
NetworkParams init_params(const NetworkConfig& config, const InputDims& dims,
                          std::uint64_t seed);

/// Throws ShapeError when `params` does not match what init_params would build.
void check_params(const NetworkParams& params, const NetworkConfig& config,
                  const InputDims& dims);

/// Parameters placed on a tape, looked up by name.
class BoundParams {
 public:
  // Watches every tensor: gradients land in params[name].grad().
  static BoundParams watch(Tape& tape, NetworkParams& params);
  // Records copies as constants; no gradients.
  static BoundParams frozen(Tape& tape, const NetworkParams& params);

  const Var& operator[](const std::string& name) const;
  Tape& tape() const { return *tape_; }

 private:
  Tape* tape_ = nullptr;
  std::unordered_map<std::string, Var> vars_;
};

/// Dilated causal conv stack over every hierarchy row; returns the final
/// time step, [N_a + N_b, C]. The target channel is aggregated through S;
/// other channels of aggregate rows are copied from their first member.
Var encode_history(const FeatureBundle& bundle, const AggregationMatrix& s,
                   const BoundParams& params, const NetworkConfig& config);

/// Residual cross-series MLP, [N_a + N_b, C] -> [N_b, C]. Returns the bottom
/// slice unchanged when the hidden size is 0.
Var cross_series_mlp(const Var& encodings, std::size_t n_bottom, const BoundParams& params,
                     const NetworkConfig& config);

/// Two-stage decoder. h_history [N_b, C], h_static [N_b, static_dim],
/// h_future [N_b, future_dim]; future_raw [N_b, F_f, N_h] feeds each
/// horizon's head with its own slice.
FactorParams decode(const Var& h_history, const Var& h_static, const Var& h_future,
                    const Tensor& future_raw, const Tensor& scale, const BoundParams& params,
                    const NetworkConfig& config);

FactorParams forward(const FeatureBundle& bundle, const AggregationMatrix& s,
                     const BoundParams& params, const NetworkConfig& config);

}  // namespace clover
