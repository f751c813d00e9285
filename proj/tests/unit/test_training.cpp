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

#include <cmath>
#include <limits>
#include <string>

#include "clover/checkpoint.hpp"
#include "clover/config.hpp"
#include "clover/error.hpp"
#include "clover/factor_model.hpp"
#include "clover/training.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace clover;

namespace {

struct SmallRun {
  SyntheticDataset syn;
  NetworkConfig network;
  FeatureConfig features;
  TrainConfig train;
};

SmallRun small_run(std::uint64_t seed = 3) {
  SmallRun r{make_synthetic(4, 120, 1, seed), {}, {}, {}};
  r.network.dilations = {1, 2, 4};
  r.network.horizon = 7;
  r.network.n_factors = 1;
  r.features.lookback = 16;
  r.train.max_steps = 40;
  r.train.eval_every = 10;
  r.train.eval_samples = 50;
  r.train.n_mc_samples = 50;
  r.train.patience = -1;
  r.train.seed = seed;
  return r;
}

std::string config_error(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("adam: first step on x^2/2") {
  Tensor x(Shape{1}, {1.0});
  x.zero_grad();
  x.grad()[0] = 1.0;  // d/dx x^2/2 at x = 1
  AdamState state;
  Tensor* params[] = {&x};
  adam_step(params, state, 0.1);
  CHECK(x[0] == doctest::Approx(0.9).epsilon(1e-9));
  CHECK(state.step == 1);
}

TEST_CASE("adam: zero gradient and missing gradient leave parameters alone") {
  std::mt19937_64 rng(1);
  Tensor a = clover::testing::random_tensor({3, 2}, rng);
  Tensor b = clover::testing::random_tensor({4}, rng);
  const Tensor a0 = a;
  const Tensor b0 = b;
  a.zero_grad();
  AdamState state;
  Tensor* params[] = {&a, &b};
  for (int i = 0; i < 3; ++i) adam_step(params, state, 0.5);
  CHECK(clover::testing::max_abs_diff(a.values(), a0.values()) == 0.0);
  CHECK(clover::testing::max_abs_diff(b.values(), b0.values()) == 0.0);
}

TEST_CASE("adam: non-finite gradient aborts before any update") {
  Tensor a(Shape{2}, {1.0, 2.0});
  Tensor b(Shape{2}, {3.0, 4.0});
  a.zero_grad();
  b.zero_grad();
  a.grad()[0] = 1.0;
  b.grad()[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState state;
  Tensor* params[] = {&a, &b};
  const std::string names[] = {"first", "second"};
  try {
    adam_step(params, state, 0.1, names);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("'second'") != std::string::npos);
  }
  CHECK(a[0] == 1.0);
  CHECK(b[1] == 4.0);
  CHECK(state.step == 0);
}

TEST_CASE("learning rate is decimated four times") {
  TrainConfig c;
  c.learning_rate = 1.0;
  c.max_steps = 100;
  CHECK(learning_rate_at(c, 0) == 1.0);
  CHECK(learning_rate_at(c, 24) == 1.0);
  CHECK(learning_rate_at(c, 25) == doctest::Approx(0.1));
  CHECK(learning_rate_at(c, 50) == doctest::Approx(0.01));
  CHECK(learning_rate_at(c, 99) == doctest::Approx(0.001));
}

TEST_CASE("train: patience -1 runs every step and keeps the best checkpoint") {
  const SmallRun r = small_run();
  const TrainResult res = train(r.syn.data, r.network, r.features, r.train);
  CHECK(res.steps_run == 40);
  CHECK(res.history.size() == 40);
  CHECK_FALSE(res.early_stopped);
  CHECK(res.history.back().step == 40);
  int evals = 0;
  for (const auto& row : res.history) {
    if (!std::isnan(row.val_scrps)) {
      ++evals;
      CHECK(res.best_val_scrps <= row.val_scrps);
    }
  }
  CHECK(evals == 4);
  CHECK(res.best_val_scrps <= res.history.back().val_scrps);

  // The returned weights reproduce the best validation score.
  const Splits splits = split(r.syn.data, {7});
  const WindowMaker wm(r.syn.data, r.features, 7, res.model.scale);
  const Tensor samples = forecast_samples(res.model, wm, splits.validation.begin,
                                          r.train.eval_samples, r.train.eval_seed);
  CHECK(scrps(wm.targets(splits.validation.begin), samples, overall_mask(7)) ==
        res.best_val_scrps);
}

TEST_CASE("train: early stopping after patience evaluations without improvement") {
  SmallRun r = small_run();
  r.train.max_steps = 400;
  r.train.eval_every = 1;
  r.train.patience = 2;
  r.train.learning_rate = 0.05;
  const TrainResult res = train(r.syn.data, r.network, r.features, r.train);
  REQUIRE(res.early_stopped);
  CHECK(res.steps_run < 400);
  CHECK(res.steps_run - res.best_step == 2);
}

TEST_CASE("train: bit-identical reruns, seed sensitivity") {
  const SmallRun r = small_run();
  const TrainResult a = train(r.syn.data, r.network, r.features, r.train);
  const TrainResult b = train(r.syn.data, r.network, r.features, r.train);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
  }
  for (std::size_t e = 0; e < a.model.params.size(); ++e) {
    CHECK(clover::testing::max_abs_diff(a.model.params.entries()[e].second.values(),
                                        b.model.params.entries()[e].second.values()) == 0.0);
  }
  SmallRun other = r;
  other.train.seed = 4;
  const TrainResult c = train(r.syn.data, r.network, r.features, other.train);
  CHECK(c.history[0].train_loss != a.history[0].train_loss);
}

TEST_CASE("train: callback can stop the loop") {
  const SmallRun r = small_run();
  const TrainResult res = train(r.syn.data, r.network, r.features, r.train,
                                [](const HistoryRow& row) { return row.step < 5; });
  CHECK(res.steps_run == 5);
}

TEST_CASE("train: input errors") {
  SmallRun r = small_run();
  r.network.horizon = 50;
  CHECK_THROWS_AS(train(r.syn.data, r.network, r.features, r.train), DataError);
  r = small_run();
  r.features.lookback = 4;
  CHECK_THROWS_AS(train(r.syn.data, r.network, r.features, r.train), ConfigError);
  r = small_run();
  r.train.max_steps = 0;
  CHECK_THROWS_AS(train(r.syn.data, r.network, r.features, r.train), ConfigError);
  r = small_run();
  HierDataset empty = r.syn.data;
  empty.values = Tensor(Shape{4, 0});
  CHECK_THROWS_AS(train(empty, r.network, r.features, r.train), DataError);
}

// Constant targets make every window identical, so progress is measured on a
// fixed probe draw after each prefix of the run.
TEST_CASE("train: loss on constant data decreases step by step") {
  constexpr int kSeeds = 10;
  int monotone = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SyntheticConfig sc;
    sc.n_bottom = 4;
    sc.length = 128;
    sc.amplitude = 0.0;
    sc.noise_scale = 0.0;
    sc.loading = 0.0;
    sc.seed = static_cast<std::uint64_t>(seed);
    const SyntheticDataset syn = make_synthetic(sc);
    NetworkConfig nc;
    nc.dilations = {1, 2, 4};
    nc.horizon = 7;
    nc.n_factors = 1;
    FeatureConfig fc;
    fc.lookback = 16;
    TrainConfig tc;
    tc.patience = -1;
    tc.eval_every = 1000;
    tc.learning_rate = 1e-3;
    tc.lr_decimations = 0;
    tc.seed = static_cast<std::uint64_t>(seed);

    const NoiseDraws probe = draw_noise(4, 1, 7, 1000, 99);
    double previous = std::numeric_limits<double>::infinity();
    bool ok = true;
    for (std::size_t steps = 1; steps <= 50 && ok; ++steps) {
      tc.max_steps = steps;
      const TrainResult res = train(syn.data, nc, fc, tc);
      const WindowMaker wm(syn.data, fc, 7, res.model.scale);
      Tape tape;
      const FactorParams fp = forward(wm.window(wm.first_end()), wm.aggregation(),
                                      BoundParams::frozen(tape, res.model.params), nc);
      const double loss = compute_loss(Objective::kCrps, wm.targets(wm.first_end()), fp,
                                       wm.aggregation(), probe)
                              .item();
      ok = loss < previous;
      previous = loss;
    }
    monotone += ok;
  }
  CHECK(monotone >= 9);
}

TEST_CASE("run config: parse, validate, round trip") {
  const RunConfig c = parse_run_config(
      "# comment\n"
      "horizon = 14\n"
      "dilations = 1, 2, 4\n"
      "objective = energy\n"
      "beta = 1.5\n"
      "energy_norm = per_series\n"
      "early_stop_patience_steps = -1\n"
      "learning_rate = 0.001\n"
      "lookback = 32\n"
      "sgd_batch_size = 1\n"
      "frequency = weekly\n");
  CHECK(c.network.horizon == 14);
  CHECK(c.network.dilations == std::vector<std::size_t>{1, 2, 4});
  CHECK(c.train.objective == Objective::kEnergy);
  CHECK(c.train.loss.beta == 1.5);
  CHECK(c.train.loss.energy_norm == EnergyNorm::kPerSeries);
  CHECK(c.train.patience == -1);
  CHECK(c.frequency == Frequency::kWeekly);
  const std::string text = format_run_config(c);
  CHECK(format_run_config(parse_run_config(text)) == text);

  CHECK(config_error("horizon = 7\ncolour = red\n").find("line 2: unknown key 'colour'") !=
        std::string::npos);
  CHECK(config_error("sgd_max_steps = 0\n").find("sgd_max_steps") != std::string::npos);
  CHECK(config_error("sgd_batch_size = 8\n").find("sgd_batch_size") != std::string::npos);
  CHECK(config_error("learning_rate = fast\n").find("line 1") != std::string::npos);
  CHECK(config_error("early_stop_patience_steps = -2\n").find("patience") != std::string::npos);
  CHECK(config_error("objective = mse\n").find("line 1") != std::string::npos);
  CHECK(config_error("dilations = 1,2,4,8,16,32\nlookback = 8\n").find("receptive field") !=
        std::string::npos);
  CHECK(config_error("objective = energy\nbeta = 2\n").find("beta") != std::string::npos);
}

TEST_CASE("checkpoint round trip reproduces forecasts") {
  const SmallRun r = small_run();
  TrainConfig quick = r.train;
  quick.max_steps = 5;
  const TrainResult res = train(r.syn.data, r.network, r.features, quick);
  RunConfig rc;
  rc.network = r.network;
  rc.features = r.features;
  rc.train = quick;
  const Checkpoint saved{rc, res.model};
  const std::string text = format_checkpoint(saved);
  const Checkpoint loaded = parse_checkpoint(text);
  CHECK(format_checkpoint(loaded) == text);
  CHECK(loaded.model.hierarchy.bottom_ids == r.syn.data.hierarchy.bottom_ids);

  const WindowMaker wm(r.syn.data, r.features, 7, loaded.model.scale);
  const std::size_t end = split(r.syn.data, {7}).test.begin;
  const Tensor a = forecast_samples(res.model, wm, end, 20, 5);
  const Tensor b = forecast_samples(loaded.model, wm, end, 20, 5);
  CHECK(clover::testing::max_abs_diff(a.values(), b.values()) == 0.0);

  CHECK_THROWS_AS(parse_checkpoint("not a checkpoint\n"), DataError);
  std::string broken = text;
  broken.replace(broken.find("values = ") + 9, 1, "x");
  CHECK_THROWS_AS(parse_checkpoint(broken), DataError);
}
