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

#include "clover/factor_model.hpp"
#include "clover/hierarchy.hpp"
#include "clover/scoring.hpp"
#include "clover/tensor.hpp"

namespace clover {

enum class Objective { kCrps, kEnergy, kNll };

std::string objective_name(Objective objective);
// Accepts crps, energy, nll. Throws ConfigError otherwise.
Objective parse_objective(const std::string& name);

struct LossConfig {
  double beta = 1.0;
  EnergyNorm energy_norm = EnergyNorm::kJoint;
};

std::string energy_norm_name(EnergyNorm norm);
// Accepts joint, per_series, per_horizon.
EnergyNorm parse_energy_norm(const std::string& name);

/// Sum of fair CRPS over every row of samples [..., N_s] against targets
/// [...]. One tape node; gradients flow to `samples`.
Var crps_sum(const Var& samples, const Tensor& targets);

/// Sum of fair energy scores of samples [N, N_h, N_s] against targets
/// [N, N_h], grouped by `norm`.
Var energy_sum(const Var& samples, const Tensor& targets, double beta, EnergyNorm norm);

/// targets [N_a + N_b, N_h]. All losses are sums over series and horizons.
Var loss_crps(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s,
              const NoiseDraws& noise);
Var loss_energy(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s,
                const NoiseDraws& noise, const LossConfig& config = {});

/// Negative log density of the bottom block of `targets` under the
/// unclipped Gaussian N(mu, Diag(sigma^2) + F F^T), summed over horizons.
/// Uses the rank-N_k capacitance matrix; never forms an N_b x N_b matrix.
Var loss_nll(const Tensor& targets, const FactorParams& params, const AggregationMatrix& s);

/// Dispatches on `objective`; `noise` is ignored for nll.
Var compute_loss(Objective objective, const Tensor& targets, const FactorParams& params,
                 const AggregationMatrix& s, const NoiseDraws& noise,
                 const LossConfig& config = {});

}  // namespace clover
