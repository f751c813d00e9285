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
#include <span>
#include <vector>

#include "clover/tensor.hpp"

// Differentiable operations on tape variables.
//
// Binary elementwise ops broadcast by trailing-dimension alignment only: the
// shape of one operand must be a suffix of the other's (a scalar has the
// empty shape and matches anything). Anything else needs an explicit
// reshape/repeat. Kinks (relu, abs) use subgradient 0.
namespace clover {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& x);
Var abs(const Var& x);
Var relu(const Var& x);
Var softplus(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var square(const Var& x);

Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double offset);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(double c, const Var& x) { return scale(x, c); }

/// Matrix product over the last two axes.
///
/// a is [..., m, k]; b is either [k, n] (shared across the batch) or
/// [..., k, n] with the same leading dims as a. Result is [..., m, n].
Var matmul(const Var& a, const Var& b);

/// Dilated causal 1-D convolution.
///
/// x is [series, c_in, time], weight is [c_out, c_in, k], bias (optional,
/// pass an invalid Var to skip) is [c_out]. Tap j reads x[t - (k-1-j)*d], so
/// the last tap is aligned with t; positions before 0 read zero. Output is
/// [series, c_out, time] and y[.., t] depends only on x[.., <= t].
Var conv1d_dilated(const Var& x, const Var& weight, const Var& bias,
                   std::size_t dilation);

Var sum(const Var& x);
Var sum(const Var& x, std::size_t axis);
Var mean(const Var& x);
Var mean(const Var& x, std::size_t axis);
Var concat(std::span<const Var> parts, std::size_t axis);

Var reshape(const Var& x, Shape shape);
// Half-open range [begin, end) along `axis`.
Var slice(const Var& x, std::size_t axis, std::size_t begin, std::size_t end);
// out.shape[i] = x.shape[perm[i]].
Var permute(const Var& x, std::span<const std::size_t> perm);
// Tiles a size-1 axis to length n.
Var repeat(const Var& x, std::size_t axis, std::size_t n);

}  // namespace clover
