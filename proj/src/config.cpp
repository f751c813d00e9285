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

#include "clover/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "clover/error.hpp"
#include "text_util.hpp"

namespace clover {

namespace {

std::size_t to_size(const text::KeyValueLine& kv) {
  std::size_t v = 0;
  if (!text::parse_size(kv.value, v)) {
    throw ConfigError("line " + std::to_string(kv.line_no) + ": " + kv.key +
                      ": expected a non-negative integer, got '" + kv.value + "'");
  }
  return v;
}

double to_double(const text::KeyValueLine& kv) {
  double v = 0.0;
  if (!text::parse_double(kv.value, v)) {
    throw ConfigError("line " + std::to_string(kv.line_no) + ": " + kv.key +
                      ": expected a number, got '" + kv.value + "'");
  }
  return v;
}

int to_int(const text::KeyValueLine& kv) {
  double v = to_double(kv);
  if (v != static_cast<double>(static_cast<int>(v))) {
    throw ConfigError("line " + std::to_string(kv.line_no) + ": " + kv.key +
                      ": expected an integer, got '" + kv.value + "'");
  }
  return static_cast<int>(v);
}

bool to_bool(const text::KeyValueLine& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ConfigError("line " + std::to_string(kv.line_no) + ": " + kv.key +
                    ": expected true or false, got '" + kv.value + "'");
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

using Setter = std::function<void(RunConfig&, const text::KeyValueLine&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"horizon", [](RunConfig& c, const auto& kv) { c.network.horizon = to_size(kv); }},
      {"dilations",
       [](RunConfig& c, const auto& kv) {
         c.network.dilations.clear();
         for (const auto& piece : text::split(kv.value, ',')) {
           text::KeyValueLine one{kv.line_no, kv.key, piece};
           c.network.dilations.push_back(to_size(one));
         }
       }},
      {"kernel_size", [](RunConfig& c, const auto& kv) { c.network.kernel_size = to_size(kv); }},
      {"temporal_convolution_channel_size",
       [](RunConfig& c, const auto& kv) { c.network.conv_channels = to_size(kv); }},
      {"static_encoder_dimension",
       [](RunConfig& c, const auto& kv) { c.network.static_dim = to_size(kv); }},
      {"future_encoder_dimension",
       [](RunConfig& c, const auto& kv) { c.network.future_dim = to_size(kv); }},
      {"horizon_agnostic_decoder_dimensions",
       [](RunConfig& c, const auto& kv) { c.network.horizon_agnostic_dim = to_size(kv); }},
      {"horizon_specific_decoder_dimensions",
       [](RunConfig& c, const auto& kv) { c.network.horizon_specific_dim = to_size(kv); }},
      {"cross_series_mlp_hidden_size",
       [](RunConfig& c, const auto& kv) { c.network.cross_series_hidden = to_size(kv); }},
      {"factor_model_components",
       [](RunConfig& c, const auto& kv) { c.network.n_factors = to_size(kv); }},
      {"sgd_batch_size",
       [](RunConfig&, const auto& kv) {
         if (to_size(kv) != 1) throw ConfigError("sgd_batch_size: only 1 is supported");
       }},
      {"sgd_max_steps", [](RunConfig& c, const auto& kv) { c.train.max_steps = to_size(kv); }},
      {"early_stop_patience_steps",
       [](RunConfig& c, const auto& kv) { c.train.patience = to_int(kv); }},
      {"learning_rate", [](RunConfig& c, const auto& kv) { c.train.learning_rate = to_double(kv); }},
      {"lr_decimations", [](RunConfig& c, const auto& kv) { c.train.lr_decimations = to_size(kv); }},
      {"objective",
       [](RunConfig& c, const auto& kv) { c.train.objective = parse_objective(kv.value); }},
      {"n_mc_samples", [](RunConfig& c, const auto& kv) { c.train.n_mc_samples = to_size(kv); }},
      {"eval_every", [](RunConfig& c, const auto& kv) { c.train.eval_every = to_size(kv); }},
      {"eval_samples", [](RunConfig& c, const auto& kv) { c.train.eval_samples = to_size(kv); }},
      {"eval_seed", [](RunConfig& c, const auto& kv) { c.train.eval_seed = to_size(kv); }},
      {"seed", [](RunConfig& c, const auto& kv) { c.train.seed = to_size(kv); }},
      {"beta", [](RunConfig& c, const auto& kv) { c.train.loss.beta = to_double(kv); }},
      {"energy_norm",
       [](RunConfig& c, const auto& kv) { c.train.loss.energy_norm = parse_energy_norm(kv.value); }},
      {"lookback", [](RunConfig& c, const auto& kv) { c.features.lookback = to_size(kv); }},
      {"seasonal_anchor",
       [](RunConfig& c, const auto& kv) { c.features.seasonal_anchor = to_bool(kv); }},
      {"season_length",
       [](RunConfig& c, const auto& kv) { c.features.season_length = to_size(kv); }},
      {"frequency", [](RunConfig& c, const auto& kv) { c.frequency = parse_frequency(kv.value); }},
  };
  return table;
}

}  // namespace

void RunConfig::validate() const {
  network.validate();
  train.validate();
  if (features.lookback < network.receptive_field()) {
    throw ConfigError("lookback " + std::to_string(features.lookback) +
                      " is shorter than the convolution receptive field " +
                      std::to_string(network.receptive_field()));
  }
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::vector<text::KeyValueLine> lines;
  try {
    lines = text::parse_key_values(text);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  for (const auto& kv : lines) {
    auto it = setters().find(kv.key);
    if (it == setters().end()) {
      throw ConfigError("line " + std::to_string(kv.line_no) + ": unknown key '" + kv.key + "'");
    }
    try {
      it->second(config, kv);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      if (msg.starts_with("line ")) throw;
      throw ConfigError("line " + std::to_string(kv.line_no) + ": " + msg);
    }
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = text::read_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text);
}

std::string format_run_config(const RunConfig& c) {
  std::ostringstream os;
  const auto& n = c.network;
  const auto& t = c.train;
  os << "horizon = " << n.horizon << '\n'
     << "dilations = " << join(n.dilations) << '\n'
     << "kernel_size = " << n.kernel_size << '\n'
     << "temporal_convolution_channel_size = " << n.conv_channels << '\n'
     << "static_encoder_dimension = " << n.static_dim << '\n'
     << "future_encoder_dimension = " << n.future_dim << '\n'
     << "horizon_agnostic_decoder_dimensions = " << n.horizon_agnostic_dim << '\n'
     << "horizon_specific_decoder_dimensions = " << n.horizon_specific_dim << '\n'
     << "cross_series_mlp_hidden_size = " << n.cross_series_hidden << '\n'
     << "factor_model_components = " << n.n_factors << '\n'
     << "sgd_max_steps = " << t.max_steps << '\n'
     << "early_stop_patience_steps = " << t.patience << '\n'
     << "learning_rate = " << text::format_double(t.learning_rate) << '\n'
     << "lr_decimations = " << t.lr_decimations << '\n'
     << "objective = " << objective_name(t.objective) << '\n'
     << "n_mc_samples = " << t.n_mc_samples << '\n'
     << "eval_every = " << t.eval_every << '\n'
     << "eval_samples = " << t.eval_samples << '\n'
     << "eval_seed = " << t.eval_seed << '\n'
     << "seed = " << t.seed << '\n'
     << "beta = " << text::format_double(t.loss.beta) << '\n'
     << "energy_norm = " << energy_norm_name(t.loss.energy_norm) << '\n'
     << "lookback = " << c.features.lookback << '\n'
     << "seasonal_anchor = " << (c.features.seasonal_anchor ? "true" : "false") << '\n'
     << "season_length = " << c.features.season_length << '\n'
     << "frequency = " << frequency_name(c.frequency) << '\n';
  return os.str();
}

}  // namespace clover
