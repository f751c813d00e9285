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

#include "clover/training.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "clover/error.hpp"
#include "clover/factor_model.hpp"
#include "clover/scoring.hpp"

namespace clover {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (max_steps < 1) throw ConfigError("sgd_max_steps must be >= 1");
  if (patience < -1) throw ConfigError("early_stop_patience_steps must be >= -1");
  if (n_mc_samples < 2) throw ConfigError("n_mc_samples must be >= 2");
  if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
  if (eval_samples < 2) throw ConfigError("eval_samples must be >= 2");
  if (objective == Objective::kEnergy && !(loss.beta > 0.0 && loss.beta < 2.0)) {
    throw ConfigError("beta must lie in (0, 2)");
  }
}

double learning_rate_at(const TrainConfig& config, std::size_t step) {
  const std::size_t drops = config.lr_decimations * step / config.max_steps;
  return config.learning_rate * std::pow(0.1, static_cast<double>(drops));
}

void adam_step(std::span<Tensor* const> params, AdamState& state, double lr,
               std::span<const std::string> names) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& p = *params[i];
    if (!p.has_grad()) continue;
    for (double g : p.grad()) {
      if (!std::isfinite(g)) {
        const std::string name = i < names.size() ? names[i] : "#" + std::to_string(i);
        throw NumericalError("adam: non-finite gradient in parameter '" + name +
                             "'; step skipped");
      }
    }
  }
  if (state.m.empty()) {
    for (Tensor* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) throw ShapeError("adam: parameter list changed size");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.size()) throw ShapeError("adam: parameter shape changed");
    const bool has = p.has_grad();
    auto values = p.values();
    for (std::size_t j = 0; j < p.size(); ++j) {
      const double g = has ? p.grad()[j] : 0.0;
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      values[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + state.eps);
    }
  }
}

void adam_step(NetworkParams& params, AdamState& state, double lr) {
  std::vector<Tensor*> ptrs;
  std::vector<std::string> names;
  for (auto& [name, t] : params.entries()) {
    ptrs.push_back(&t);
    names.push_back(name);
  }
  adam_step(ptrs, state, lr, names);
}

namespace {

double validation_scrps(const Model& model, const WindowMaker& windows, std::size_t end,
                        const TrainConfig& config) {
  const Tensor samples = forecast_samples(model, windows, end, config.eval_samples, config.eval_seed);
  return scrps(windows.targets(end), samples, overall_mask(windows.aggregation().rows()));
}

}  // namespace

TrainResult train(const HierDataset& dataset, const NetworkConfig& network,
                  const FeatureConfig& features, const TrainConfig& config,
                  const StepCallback& on_step) {
  network.validate();
  config.validate();
  if (dataset.length() == 0 || dataset.n_bottom() == 0) throw DataError("train: empty dataset");
  const std::size_t nh = network.horizon;
  const Splits splits = split(dataset, SplitSpec{nh});
  if (features.lookback < network.receptive_field()) {
    throw ConfigError("lookback " + std::to_string(features.lookback) +
                      " is shorter than the convolution receptive field " +
                      std::to_string(network.receptive_field()));
  }
  WindowMaker windows(dataset, features, nh, series_scale(splits.train));
  const std::size_t lo = windows.first_end();
  if (splits.train.end < lo + nh) {
    throw DataError("train: training span of " + std::to_string(splits.train.length()) +
                    " steps is too short for lookback " + std::to_string(lo) + " plus horizon " +
                    std::to_string(nh));
  }
  const std::size_t hi = splits.train.end - nh;
  const std::size_t val_end = splits.validation.begin;

  Model model{network, features, windows.dims(), dataset.hierarchy, windows.scale(),
              init_params(network, windows.dims(), config.seed)};
  const AggregationMatrix& s = windows.aggregation();
  const std::size_t nb = s.n_bottom();

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> pick_end(lo, hi);
  AdamState adam;

  TrainResult result;
  result.best_val_scrps = std::numeric_limits<double>::infinity();
  result.model = model;
  int since_best = 0;
  for (std::size_t step = 0; step < config.max_steps; ++step) {
    const std::size_t end = pick_end(rng);
    const std::uint64_t noise_seed = rng();
    const double lr = learning_rate_at(config, step);

    double loss_value = 0.0;
    {
      Tape tape;
      const BoundParams bound = BoundParams::watch(tape, model.params);
      const FactorParams fp = forward(windows.window(end), s, bound, network);
      const NoiseDraws noise =
          config.objective == Objective::kNll
              ? NoiseDraws{}
              : draw_noise(nb, network.n_factors, nh, config.n_mc_samples, noise_seed);
      const Var loss = compute_loss(config.objective, windows.targets(end), fp, s, noise, config.loss);
      loss_value = loss.item();
      if (!std::isfinite(loss_value)) {
        throw NumericalError("train: non-finite loss at step " + std::to_string(step + 1));
      }
      model.params.zero_grad();
      tape.backward(loss);
    }
    adam_step(model.params, adam, lr);

    HistoryRow row{step + 1, loss_value, std::numeric_limits<double>::quiet_NaN(), lr};
    const bool last = step + 1 == config.max_steps;
    bool stop = false;
    if ((step + 1) % config.eval_every == 0 || last) {
      row.val_scrps = validation_scrps(model, windows, val_end, config);
      if (row.val_scrps < result.best_val_scrps) {
        result.best_val_scrps = row.val_scrps;
        result.best_step = step + 1;
        result.model = model;
        since_best = 0;
      } else {
        ++since_best;
        if (config.patience >= 0 && since_best >= config.patience) stop = true;
      }
    }
    result.history.push_back(row);
    result.steps_run = step + 1;
    if (on_step && !on_step(row)) break;
    if (stop) {
      result.early_stopped = true;
      break;
    }
  }
  result.model.params.zero_grad();
  return result;
}

FactorValues forecast_params(const Model& model, const WindowMaker& windows, std::size_t end) {
  Tape tape;
  const BoundParams bound = BoundParams::frozen(tape, model.params);
  const FactorParams fp = forward(windows.window(end), windows.aggregation(), bound, model.network);
  return {fp.mu.value(), fp.sigma.value(), fp.loadings.value()};
}

Tensor forecast_samples(const Model& model, const WindowMaker& windows, std::size_t end,
                        std::size_t n_samples, std::uint64_t seed) {
  Tape tape;
  const BoundParams bound = BoundParams::frozen(tape, model.params);
  const AggregationMatrix& s = windows.aggregation();
  const FactorParams fp = forward(windows.window(end), s, bound, model.network);
  const NoiseDraws noise =
      draw_noise(s.n_bottom(), model.network.n_factors, model.network.horizon, n_samples, seed);
  return sample(fp, noise, s).coherent.value();
}

}  // namespace clover
