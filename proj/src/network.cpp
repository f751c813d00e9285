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

#include "clover/network.hpp"

#include <array>
#include <cmath>
#include <random>

#include "clover/error.hpp"
#include "clover/ops.hpp"

namespace clover {

namespace {

constexpr double kSigmaFloor = 1e-6;

struct ParamShape {
  std::string name;
  Shape shape;
  std::size_t fan_in;
};

std::vector<ParamShape> param_layout(const NetworkConfig& c, const InputDims& d) {
  std::vector<ParamShape> out;
  std::size_t c_in = d.historical_channels;
  for (std::size_t i = 0; i < c.dilations.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    out.push_back({p + ".weight", {c.conv_channels, c_in, c.kernel_size}, c_in * c.kernel_size});
    out.push_back({p + ".bias", {c.conv_channels}, c_in * c.kernel_size});
    c_in = c.conv_channels;
  }
  if (c.cross_series_hidden > 0) {
    const std::size_t flat = d.n_series * c.conv_channels;
    out.push_back({"cross.w1", {flat, c.cross_series_hidden}, flat});
    out.push_back({"cross.b1", {c.cross_series_hidden}, flat});
    out.push_back({"cross.w2", {c.cross_series_hidden, d.n_bottom * c.conv_channels},
                   c.cross_series_hidden});
    out.push_back({"cross.b2", {d.n_bottom * c.conv_channels}, c.cross_series_hidden});
  }
  out.push_back({"static.w", {d.static_channels, c.static_dim}, d.static_channels});
  out.push_back({"static.b", {c.static_dim}, d.static_channels});
  const std::size_t fut = d.future_channels * c.horizon;
  out.push_back({"future.w", {fut, c.future_dim}, fut});
  out.push_back({"future.b", {c.future_dim}, fut});
  const std::size_t ctx = c.conv_channels + c.static_dim + c.future_dim;
  out.push_back({"agnostic.w", {ctx, c.horizon_agnostic_dim}, ctx});
  out.push_back({"agnostic.b", {c.horizon_agnostic_dim}, ctx});
  out.push_back({"specific.w", {ctx, c.horizon * c.horizon_specific_dim}, ctx});
  out.push_back({"specific.b", {c.horizon * c.horizon_specific_dim}, ctx});
  const std::size_t head = c.horizon_specific_dim + c.horizon_agnostic_dim + d.future_channels;
  out.push_back({"head.w", {head, 2 + c.n_factors}, head});
  out.push_back({"head.b", {2 + c.n_factors}, head});
  return out;
}

// x [m, in] -> x W + b, for layers named <prefix>.w / <prefix>.b (or .w1 / .b1 ...)
Var dense(const Var& x, const BoundParams& p, const std::string& prefix, int index = 0) {
  const std::string suffix = index > 0 ? std::to_string(index) : "";
  return matmul(x, p[prefix + ".w" + suffix]) + p[prefix + ".b" + suffix];
}

Var scale_constant(Tape& tape, const Tensor& scale, const Shape& shape) {
  // Broadcast scale[b] over every trailing axis of `shape`.
  Tensor t(shape);
  const std::size_t inner = t.size() / shape[0];
  for (std::size_t b = 0; b < shape[0]; ++b) {
    for (std::size_t e = 0; e < inner; ++e) t[b * inner + e] = scale[b];
  }
  return tape.constant(std::move(t));
}

}  // namespace

void NetworkConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  if (dilations.empty()) throw ConfigError("dilations: at least one layer required");
  for (std::size_t d : dilations) {
    if (d < 1) throw ConfigError("dilations: values must be >= 1");
  }
  positive(kernel_size, "kernel_size");
  positive(conv_channels, "temporal_convolution_channel_size");
  positive(static_dim, "static_encoder_dimension");
  positive(future_dim, "future_encoder_dimension");
  positive(horizon_agnostic_dim, "horizon_agnostic_decoder_dimensions");
  positive(horizon_specific_dim, "horizon_specific_decoder_dimensions");
  positive(horizon, "horizon");
}

std::size_t NetworkConfig::receptive_field() const {
  std::size_t span = 1;
  for (std::size_t d : dilations) span += d * (kernel_size - 1);
  return span;
}

void FeatureBundle::validate(const InputDims& dims, std::size_t horizon) const {
  const auto fail = [](const std::string& what) { throw ShapeError("feature bundle: " + what); };
  if (historical.rank() != 3) fail("historical must be [N_b, F_h, T]");
  const std::size_t nb = historical.dim(0);
  if (nb != dims.n_bottom) {
    fail("has " + std::to_string(nb) + " bottom series, model expects " +
         std::to_string(dims.n_bottom));
  }
  if (historical.dim(1) != dims.historical_channels) {
    fail("historical has " + std::to_string(historical.dim(1)) + " channels, model expects " +
         std::to_string(dims.historical_channels));
  }
  if (target_channel >= historical.dim(1)) fail("target channel out of range");
  if (future.shape() != Shape{nb, dims.future_channels, horizon}) {
    fail("future " + shape_string(future.shape()) + " expected " +
         shape_string({nb, dims.future_channels, horizon}));
  }
  if (statics.shape() != Shape{nb, dims.static_channels}) {
    fail("static " + shape_string(statics.shape()) + " expected " +
         shape_string({nb, dims.static_channels}));
  }
  if (scale.shape() != Shape{nb}) fail("scale must be [N_b]");
  for (double v : scale.values()) {
    if (!(v > 0.0)) fail("scale entries must be > 0");
  }
}

void NetworkParams::add(std::string name, Tensor value) {
  if (index_.contains(name)) throw ConfigError("duplicate parameter '" + name + "'");
  index_.emplace(name, entries_.size());
  entries_.emplace_back(std::move(name), std::move(value));
}

Tensor& NetworkParams::operator[](const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& NetworkParams::operator[](const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t NetworkParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

void NetworkParams::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

NetworkParams init_params(const NetworkConfig& config, const InputDims& dims,
                          std::uint64_t seed) {
  config.validate();
  if (dims.n_bottom == 0 || dims.n_series < dims.n_bottom || dims.historical_channels == 0 ||
      dims.future_channels == 0 || dims.static_channels == 0) {
    throw ConfigError("init_params: every input dimension must be >= 1");
  }
  std::mt19937_64 rng(seed);
  NetworkParams params;
  for (const auto& p : param_layout(config, dims)) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Tensor t(p.shape);
    for (double& v : t.values()) v = u(rng);
    t.set_requires_grad(true);
    params.add(p.name, std::move(t));
  }
  return params;
}

void check_params(const NetworkParams& params, const NetworkConfig& config,
                  const InputDims& dims) {
  const auto layout = param_layout(config, dims);
  if (layout.size() != params.size()) {
    throw ShapeError("checkpoint has " + std::to_string(params.size()) +
                     " parameter tensors, config implies " + std::to_string(layout.size()));
  }
  for (const auto& p : layout) {
    if (!params.contains(p.name)) throw ShapeError("missing parameter '" + p.name + "'");
    if (params[p.name].shape() != p.shape) {
      throw ShapeError("parameter '" + p.name + "' has shape " +
                       shape_string(params[p.name].shape()) + ", expected " +
                       shape_string(p.shape));
    }
  }
}

BoundParams BoundParams::watch(Tape& tape, NetworkParams& params) {
  BoundParams out;
  out.tape_ = &tape;
  for (auto& [name, t] : params.entries()) out.vars_.emplace(name, tape.watch(t));
  return out;
}

BoundParams BoundParams::frozen(Tape& tape, const NetworkParams& params) {
  BoundParams out;
  out.tape_ = &tape;
  for (const auto& [name, t] : params.entries()) out.vars_.emplace(name, tape.constant(t));
  return out;
}

const Var& BoundParams::operator[](const std::string& name) const {
  auto it = vars_.find(name);
  if (it == vars_.end()) throw ShapeError("unknown parameter '" + name + "'");
  return it->second;
}

Var encode_history(const FeatureBundle& bundle, const AggregationMatrix& s,
                   const BoundParams& params, const NetworkConfig& config) {
  const Tensor& hist = bundle.historical;
  if (hist.rank() != 3 || hist.dim(0) != s.n_bottom()) {
    throw ShapeError("encode_history: historical " + shape_string(hist.shape()) +
                     " does not match N_b = " + std::to_string(s.n_bottom()));
  }
  const std::size_t nb = s.n_bottom();
  const std::size_t n = s.rows();
  const std::size_t channels = hist.dim(1);
  const std::size_t t_len = hist.dim(2);
  if (t_len < config.receptive_field()) {
    throw DataError("encode_history: history length " + std::to_string(t_len) +
                    " is shorter than the convolution receptive field " +
                    std::to_string(config.receptive_field()));
  }
  const std::size_t tc = bundle.target_channel;

  Tensor x(Shape{n, channels, t_len});
  for (std::size_t r = 0; r < n; ++r) {
    double row_scale = 0.0;
    std::size_t first = nb;
    for (std::size_t b = 0; b < nb; ++b) {
      if (s(r, b) == 0.0) continue;
      row_scale += bundle.scale[b];
      if (first == nb) first = b;
    }
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t t = 0; t < t_len; ++t) {
        if (c == tc) {
          double acc = 0.0;
          for (std::size_t b = 0; b < nb; ++b) {
            if (s(r, b) != 0.0) acc += hist.at(b, c, t);
          }
          x.at(r, c, t) = acc / row_scale;
        } else {
          x.at(r, c, t) = hist.at(first, c, t);
        }
      }
    }
  }

  Var h = params.tape().constant(std::move(x));
  for (std::size_t i = 0; i < config.dilations.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    h = relu(conv1d_dilated(h, params[p + ".weight"], params[p + ".bias"], config.dilations[i]));
  }
  return reshape(slice(h, 2, t_len - 1, t_len), {n, config.conv_channels});
}

Var cross_series_mlp(const Var& encodings, std::size_t n_bottom, const BoundParams& params,
                     const NetworkConfig& config) {
  const Shape& sh = encodings.shape();
  if (sh.size() != 2 || sh[0] < n_bottom) {
    throw ShapeError("cross_series_mlp: encodings " + shape_string(sh) + " for N_b = " +
                     std::to_string(n_bottom));
  }
  Var bottom = slice(encodings, 0, sh[0] - n_bottom, sh[0]);
  if (config.cross_series_hidden == 0) return bottom;
  Var flat = reshape(encodings, {1, sh[0] * sh[1]});
  Var hidden = relu(dense(flat, params, "cross", 1));
  Var out = dense(hidden, params, "cross", 2);
  return reshape(out, {n_bottom, sh[1]}) + bottom;
}

FactorParams decode(const Var& h_history, const Var& h_static, const Var& h_future,
                    const Tensor& future_raw, const Tensor& scale, const BoundParams& params,
                    const NetworkConfig& config) {
  const std::size_t nb = h_history.shape()[0];
  const std::size_t nh = config.horizon;
  if (h_static.shape()[0] != nb || h_future.shape()[0] != nb || future_raw.rank() != 3 ||
      future_raw.dim(0) != nb || future_raw.dim(2) != nh || scale.shape() != Shape{nb}) {
    throw ShapeError("decode: inconsistent N_b / N_h across inputs");
  }
  Tape& tape = params.tape();
  const Var ctx_parts[] = {h_history, h_static, h_future};
  Var ctx = concat(ctx_parts, 1);
  Var agnostic = relu(dense(ctx, params, "agnostic"));
  Var specific = relu(dense(ctx, params, "specific"));
  specific = reshape(specific, {nb, nh, config.horizon_specific_dim});
  Var agnostic_h = repeat(reshape(agnostic, {nb, 1, config.horizon_agnostic_dim}), 1, nh);
  static constexpr std::array<std::size_t, 3> kSwapLast{0, 2, 1};
  Var future_h = permute(tape.constant(future_raw), kSwapLast);  // [N_b, N_h, F_f]
  const Var head_parts[] = {specific, agnostic_h, future_h};
  Var raw = dense(concat(head_parts, 2), params, "head");

  Var mu_raw = reshape(slice(raw, 2, 0, 1), {nb, nh});
  Var sigma_raw = reshape(slice(raw, 2, 1, 2), {nb, nh});
  Var unit = scale_constant(tape, scale, {nb, nh});
  FactorParams out;
  out.mu = mu_raw * unit;
  out.sigma = add_scalar(softplus(sigma_raw), kSigmaFloor) * unit;
  if (config.n_factors > 0) {
    Var f = permute(slice(raw, 2, 2, 2 + config.n_factors), kSwapLast);  // [N_b, N_k, N_h]
    out.loadings = f * scale_constant(tape, scale, {nb, config.n_factors, nh});
  } else {
    out.loadings = tape.constant(Tensor(Shape{nb, 0, nh}));
  }
  return out;
}

FactorParams forward(const FeatureBundle& bundle, const AggregationMatrix& s,
                     const BoundParams& params, const NetworkConfig& config) {
  const std::size_t nb = s.n_bottom();
  Var enc = encode_history(bundle, s, params, config);
  Var h_history = cross_series_mlp(enc, nb, params, config);
  Tape& tape = params.tape();
  Var h_static = relu(dense(tape.constant(bundle.statics), params, "static"));
  Var fut_flat = tape.constant(
      bundle.future.reshaped({nb, bundle.future.dim(1) * bundle.future.dim(2)}));
  Var h_future = relu(dense(fut_flat, params, "future"));
  return decode(h_history, h_static, h_future, bundle.future, bundle.scale, params, config);
}

}  // namespace clover
