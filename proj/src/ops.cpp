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

#include "clover/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "clover/error.hpp"
#include "clover/kernels.hpp"

namespace clover {

namespace {

namespace kp = kernels::parallel;

bool is_suffix(const Shape& small, const Shape& big) {
  if (small.size() > big.size()) return false;
  return std::equal(small.begin(), small.end(), big.end() - small.size());
}

void check_axis(const Shape& shape, std::size_t axis, const char* op) {
  if (axis >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) +
                     " out of range for " + shape_string(shape));
  }
}

// A shape seen as outer * len * inner around one axis.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t len = 1;
  std::size_t inner = 1;
};

AxisSplit split_at(const Shape& shape, std::size_t axis) {
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.len = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

enum class BinaryKind { kAdd, kSub, kMul };

Var binary(const Var& a, const Var& b, BinaryKind kind) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  Shape out_shape;
  if (is_suffix(sb, sa)) {
    out_shape = sa;
  } else if (is_suffix(sa, sb)) {
    out_shape = sb;
  } else {
    throw ShapeError("cannot broadcast " + shape_string(sa) + " with " +
                     shape_string(sb));
  }
  const std::size_t n = shape_size(out_shape);
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  Tensor out(out_shape);
  const auto av = a.value().values();
  const auto bv = b.value().values();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = av[i % na];
    const double y = bv[i % nb];
    switch (kind) {
      case BinaryKind::kAdd: out[i] = x + y; break;
      case BinaryKind::kSub: out[i] = x - y; break;
      case BinaryKind::kMul: out[i] = x * y; break;
    }
  }
  Tape& tape = a.tape();
  const Var parents[] = {a, b};
  return tape.record(std::move(out), parents, [&tape, a, b, kind, n, na, nb](
                                                  std::span<const double> up) {
    const auto av = a.value().values();
    const auto bv = b.value().values();
    if (a.requires_grad()) {
      auto ga = tape.grad_buffer(a.id());
      for (std::size_t i = 0; i < n; ++i) {
        ga[i % na] += kind == BinaryKind::kMul ? up[i] * bv[i % nb] : up[i];
      }
    }
    if (b.requires_grad()) {
      auto gb = tape.grad_buffer(b.id());
      for (std::size_t i = 0; i < n; ++i) {
        double g = up[i];
        if (kind == BinaryKind::kSub) g = -g;
        if (kind == BinaryKind::kMul) g *= av[i % na];
        gb[i % nb] += g;
      }
    }
  });
}

// Elementwise op from f(x) and f'(x).
template <typename Fwd, typename Deriv>
Var unary(const Var& x, Fwd fwd, Deriv deriv) {
  const auto xv = x.value().values();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = fwd(xv[i]);
  Tape& tape = x.tape();
  const Var parents[] = {x};
  return tape.record(std::move(out), parents,
                     [&tape, x, deriv](std::span<const double> up) {
                       const auto xv = x.value().values();
                       auto g = tape.grad_buffer(x.id());
                       for (std::size_t i = 0; i < xv.size(); ++i) {
                         g[i] += up[i] * deriv(xv[i]);
                       }
                     });
}

// Ops that only move values around: out[i] = x[index[i]].
Var gather(const Var& x, Shape out_shape, std::vector<std::size_t> index) {
  const auto xv = x.value().values();
  Tensor out(std::move(out_shape));
  for (std::size_t i = 0; i < index.size(); ++i) out[i] = xv[index[i]];
  Tape& tape = x.tape();
  const Var parents[] = {x};
  return tape.record(std::move(out), parents,
                     [&tape, x, index = std::move(index)](std::span<const double> up) {
                       auto g = tape.grad_buffer(x.id());
                       for (std::size_t i = 0; i < index.size(); ++i) g[index[i]] += up[i];
                     });
}

}  // namespace

Var add(const Var& a, const Var& b) { return binary(a, b, BinaryKind::kAdd); }
Var sub(const Var& a, const Var& b) { return binary(a, b, BinaryKind::kSub); }
Var mul(const Var& a, const Var& b) { return binary(a, b, BinaryKind::kMul); }

Var neg(const Var& x) { return scale(x, -1.0); }

Var abs(const Var& x) {
  return unary(
      x, [](double v) { return std::abs(v); },
      [](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
}

Var relu(const Var& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Var softplus(const Var& x) {
  return unary(
      x, [](double v) { return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v))); },
      [](double v) {
        return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
      });
}

Var exp(const Var& x) {
  return unary(
      x, [](double v) { return std::exp(v); }, [](double v) { return std::exp(v); });
}

Var log(const Var& x) {
  return unary(
      x, [](double v) { return std::log(v); }, [](double v) { return 1.0 / v; });
}

Var square(const Var& x) {
  return unary(
      x, [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Var scale(const Var& x, double factor) {
  return unary(
      x, [factor](double v) { return factor * v; }, [factor](double) { return factor; });
}

Var add_scalar(const Var& x, double offset) {
  return unary(
      x, [offset](double v) { return v + offset; }, [](double) { return 1.0; });
}

Var matmul(const Var& a, const Var& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() < 2 || sb.size() < 2) {
    throw ShapeError("matmul needs rank >= 2, got " + shape_string(sa) + " and " +
                     shape_string(sb));
  }
  const kernels::MatmulDims d{sa[sa.size() - 2], sa.back(), sb.back()};
  if (sb[sb.size() - 2] != d.k) {
    throw ShapeError("matmul inner dimensions differ: " + shape_string(sa) + " * " +
                     shape_string(sb));
  }
  const bool shared_b = sb.size() == 2;
  if (!shared_b && (sb.size() != sa.size() ||
                    !std::equal(sa.begin(), sa.end() - 2, sb.begin()))) {
    throw ShapeError("matmul batch dimensions differ: " + shape_string(sa) + " * " +
                     shape_string(sb));
  }
  const std::size_t batch = a.size() / std::max<std::size_t>(d.m * d.k, 1);
  Shape out_shape(sa.begin(), sa.end() - 1);
  out_shape.push_back(d.n);
  Tensor out(out_shape);
  const auto av = a.value().values();
  const auto bv = b.value().values();
  for (std::size_t q = 0; q < batch; ++q) {
    kp::matmul(d, av.subspan(q * d.m * d.k, d.m * d.k),
               bv.subspan(shared_b ? 0 : q * d.k * d.n, d.k * d.n),
               out.values().subspan(q * d.m * d.n, d.m * d.n));
  }
  Tape& tape = a.tape();
  const Var parents[] = {a, b};
  return tape.record(std::move(out), parents, [&tape, a, b, d, batch, shared_b](
                                                  std::span<const double> up) {
    const auto av = a.value().values();
    const auto bv = b.value().values();
    for (std::size_t q = 0; q < batch; ++q) {
      const auto dc = up.subspan(q * d.m * d.n, d.m * d.n);
      const std::size_t boff = shared_b ? 0 : q * d.k * d.n;
      if (a.requires_grad()) {
        kp::matmul_grad_a_accumulate(
            d, dc, bv.subspan(boff, d.k * d.n),
            tape.grad_buffer(a.id()).subspan(q * d.m * d.k, d.m * d.k));
      }
      if (b.requires_grad()) {
        kp::matmul_grad_b_accumulate(d, av.subspan(q * d.m * d.k, d.m * d.k), dc,
                                     tape.grad_buffer(b.id()).subspan(boff, d.k * d.n));
      }
    }
  });
}

Var conv1d_dilated(const Var& x, const Var& weight, const Var& bias,
                   std::size_t dilation) {
  if (dilation < 1) throw ConfigError("conv1d_dilated: dilation must be >= 1");
  const Shape& sx = x.shape();
  const Shape& sw = weight.shape();
  if (sx.size() != 3 || sw.size() != 3 || sw[1] != sx[1] || sw[2] < 1) {
    throw ShapeError("conv1d_dilated: input " + shape_string(sx) +
                     " incompatible with kernel " + shape_string(sw));
  }
  const bool has_bias = bias.valid();
  if (has_bias && bias.shape() != Shape{sw[0]}) {
    throw ShapeError("conv1d_dilated: bias " + shape_string(bias.shape()) +
                     " for " + std::to_string(sw[0]) + " output channels");
  }
  const kernels::ConvDims d{sx[0], sx[1], sw[0], sx[2], sw[2], dilation};
  Tensor out(Shape{d.series, d.c_out, d.time});
  kp::conv1d(d, x.value().values(), weight.value().values(),
             has_bias ? bias.value().values() : std::span<const double>{},
             out.values());
  Tape& tape = x.tape();
  std::vector<Var> parents{x, weight};
  if (has_bias) parents.push_back(bias);
  return tape.record(std::move(out), parents,
                     [&tape, x, weight, bias, has_bias, d](std::span<const double> up) {
                       if (x.requires_grad()) {
                         kp::conv1d_grad_input_accumulate(d, up, weight.value().values(),
                                                          tape.grad_buffer(x.id()));
                       }
                       const bool wg = weight.requires_grad();
                       const bool bg = has_bias && bias.requires_grad();
                       if (wg || bg) {
                         std::vector<double> scratch;
                         std::span<double> dw;
                         if (wg) {
                           dw = tape.grad_buffer(weight.id());
                         } else {
                           scratch.assign(weight.size(), 0.0);
                           dw = scratch;
                         }
                         kp::conv1d_grad_params_accumulate(
                             d, up, x.value().values(), dw,
                             bg ? tape.grad_buffer(bias.id()) : std::span<double>{});
                       }
                     });
}

Var sum(const Var& x) {
  const auto xv = x.value().values();
  double acc = 0.0;
  for (double v : xv) acc += v;
  Tape& tape = x.tape();
  const Var parents[] = {x};
  return tape.record(Tensor::scalar(acc), parents,
                     [&tape, x](std::span<const double> up) {
                       auto g = tape.grad_buffer(x.id());
                       for (double& v : g) v += up[0];
                     });
}

Var sum(const Var& x, std::size_t axis) {
  check_axis(x.shape(), axis, "sum");
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
  Tensor out(out_shape);
  const auto xv = x.value().values();
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < s.len; ++l) {
      for (std::size_t i = 0; i < s.inner; ++i) {
        out[o * s.inner + i] += xv[(o * s.len + l) * s.inner + i];
      }
    }
  }
  Tape& tape = x.tape();
  const Var parents[] = {x};
  return tape.record(std::move(out), parents, [&tape, x, s](std::span<const double> up) {
    auto g = tape.grad_buffer(x.id());
    for (std::size_t o = 0; o < s.outer; ++o) {
      for (std::size_t l = 0; l < s.len; ++l) {
        for (std::size_t i = 0; i < s.inner; ++i) {
          g[(o * s.len + l) * s.inner + i] += up[o * s.inner + i];
        }
      }
    }
  });
}

Var mean(const Var& x) {
  if (x.size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.size()));
}

Var mean(const Var& x, std::size_t axis) {
  check_axis(x.shape(), axis, "mean");
  if (x.shape()[axis] == 0) throw ShapeError("mean over an empty axis");
  return scale(sum(x, axis), 1.0 / static_cast<double>(x.shape()[axis]));
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat of no tensors");
  const Shape& first = parts[0].shape();
  check_axis(first, axis, "concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    const Shape& sp = p.shape();
    bool ok = sp.size() == first.size();
    for (std::size_t i = 0; ok && i < sp.size(); ++i) ok = i == axis || sp[i] == first[i];
    if (!ok) {
      throw ShapeError("concat: " + shape_string(sp) + " does not match " +
                       shape_string(first) + " off axis " + std::to_string(axis));
    }
    out_shape[axis] += sp[axis];
  }
  const AxisSplit os = split_at(out_shape, axis);
  std::vector<std::size_t> offsets;
  Tensor out(out_shape);
  std::size_t off = 0;
  for (const Var& p : parts) {
    offsets.push_back(off);
    const std::size_t len = p.shape()[axis];
    const auto pv = p.value().values();
    for (std::size_t o = 0; o < os.outer; ++o) {
      std::copy_n(pv.begin() + static_cast<std::ptrdiff_t>(o * len * os.inner),
                  len * os.inner,
                  out.values().begin() +
                      static_cast<std::ptrdiff_t>((o * os.len + off) * os.inner));
    }
    off += len;
  }
  Tape& tape = parts[0].tape();
  std::vector<Var> keep(parts.begin(), parts.end());
  return tape.record(std::move(out), parts,
                     [&tape, keep, offsets, os, axis](std::span<const double> up) {
                       for (std::size_t k = 0; k < keep.size(); ++k) {
                         if (!keep[k].requires_grad()) continue;
                         const std::size_t len = keep[k].shape()[axis];
                         auto g = tape.grad_buffer(keep[k].id());
                         for (std::size_t o = 0; o < os.outer; ++o) {
                           for (std::size_t e = 0; e < len * os.inner; ++e) {
                             g[o * len * os.inner + e] +=
                                 up[(o * os.len + offsets[k]) * os.inner + e];
                           }
                         }
                       }
                     });
}

Var reshape(const Var& x, Shape shape) {
  if (shape_size(shape) != x.size()) {
    throw ShapeError("reshape " + shape_string(x.shape()) + " to " + shape_string(shape));
  }
  Tape& tape = x.tape();
  const Var parents[] = {x};
  return tape.record(x.value().reshaped(std::move(shape)), parents,
                     [&tape, x](std::span<const double> up) {
                       auto g = tape.grad_buffer(x.id());
                       for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i];
                     });
}

Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end) {
  check_axis(x.shape(), axis, "slice");
  if (begin > end || end > x.shape()[axis]) {
    throw ShapeError("slice [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") out of range on axis " + std::to_string(axis) + " of " +
                     shape_string(x.shape()));
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = end - begin;
  std::vector<std::size_t> index;
  index.reserve(shape_size(out_shape));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = begin; l < end; ++l) {
      for (std::size_t i = 0; i < s.inner; ++i) index.push_back((o * s.len + l) * s.inner + i);
    }
  }
  return gather(x, std::move(out_shape), std::move(index));
}

Var permute(const Var& x, std::span<const std::size_t> perm) {
  const Shape& sx = x.shape();
  std::vector<bool> seen(sx.size(), false);
  if (perm.size() != sx.size()) throw ShapeError("permute: wrong number of axes");
  for (std::size_t p : perm) {
    if (p >= sx.size() || seen[p]) throw ShapeError("permute: invalid permutation");
    seen[p] = true;
  }
  Shape out_shape(sx.size());
  for (std::size_t i = 0; i < sx.size(); ++i) out_shape[i] = sx[perm[i]];
  std::vector<std::size_t> in_stride(sx.size(), 1);
  for (std::size_t i = sx.size(); i-- > 1;) in_stride[i - 1] = in_stride[i] * sx[i];
  const std::size_t n = x.size();
  std::vector<std::size_t> index(n);
  std::vector<std::size_t> counter(sx.size(), 0);
  for (std::size_t lin = 0; lin < n; ++lin) {
    std::size_t src = 0;
    for (std::size_t i = 0; i < sx.size(); ++i) src += counter[i] * in_stride[perm[i]];
    index[lin] = src;
    for (std::size_t i = sx.size(); i-- > 0;) {
      if (++counter[i] < out_shape[i]) break;
      counter[i] = 0;
    }
  }
  return gather(x, std::move(out_shape), std::move(index));
}

Var repeat(const Var& x, std::size_t axis, std::size_t n) {
  check_axis(x.shape(), axis, "repeat");
  if (x.shape()[axis] != 1) {
    throw ShapeError("repeat: axis " + std::to_string(axis) + " of " +
                     shape_string(x.shape()) + " is not of size 1");
  }
  const AxisSplit s = split_at(x.shape(), axis);
  Shape out_shape = x.shape();
  out_shape[axis] = n;
  std::vector<std::size_t> index;
  index.reserve(shape_size(out_shape));
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t l = 0; l < n; ++l) {
      for (std::size_t i = 0; i < s.inner; ++i) index.push_back(o * s.inner + i);
    }
  }
  return gather(x, std::move(out_shape), std::move(index));
}

}  // namespace clover
