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

#include <array>
#include <random>

#include "clover/error.hpp"
#include "clover/ops.hpp"
#include "clover/tensor.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace clover;
using clover::testing::all_indices;
using clover::testing::check_gradient;
using clover::testing::random_tensor;

TEST_CASE("tensor construction and indexing") {
  Tensor t(Shape{2, 3}, {0, 1, 2, 3, 4, 5});
  CHECK(t.at(1, 2) == 5.0);
  CHECK(t.dim(0) == 2);
  CHECK_THROWS_AS(t.dim(2), ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK(Tensor::scalar(3.5).item() == 3.5);
  CHECK_THROWS_AS(t.item(), ShapeError);
  CHECK(t.reshaped(Shape{3, 2}).at(2, 1) == 5.0);
  CHECK_THROWS_AS(t.reshaped(Shape{4}), ShapeError);
}

TEST_CASE("backward accumulates through a shared subexpression") {
  Tensor x(Shape{}, {3.0});
  Tape tape;
  const Var xv = tape.watch(x);
  const Var y = xv * xv + xv;  // dy/dx = 2x + 1
  tape.backward(y);
  CHECK(x.grad()[0] == doctest::Approx(7.0));
}

TEST_CASE("backward needs a scalar and the same tape") {
  Tensor x(Shape{2}, {1.0, 2.0});
  Tape a;
  Tape b;
  const Var xa = a.watch(x);
  CHECK_THROWS_AS(a.backward(xa), ShapeError);
  const Var xb = b.constant(Tensor(Shape{2}, 1.0));
  CHECK_THROWS_AS(add(xa, xb), ShapeError);
}

TEST_CASE("constants receive no gradient") {
  Tape tape;
  const Var c = tape.constant(Tensor::scalar(2.0));
  const Var y = c * c;
  CHECK_FALSE(y.requires_grad());
  tape.backward(y);
  CHECK(c.grad().empty());
}

TEST_CASE("broadcast requires a trailing suffix") {
  Tape tape;
  const Var a = tape.constant(Tensor(Shape{2, 3}, 1.0));
  const Var row = tape.constant(Tensor(Shape{3}, {1.0, 2.0, 3.0}));
  const Var col = tape.constant(Tensor(Shape{2}, 1.0));
  const Var s = add(a, row);
  CHECK(s.value().at(1, 2) == 4.0);
  CHECK_THROWS_AS(add(a, col), ShapeError);
}

TEST_CASE("elementwise op gradients match central differences") {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({3, 4}, rng, 0.2, 2.0);
  Tensor w = random_tensor({4}, rng);
  const auto r = check_gradient(x, [&](Tape& t, const Var& v) {
    const Var wc = t.constant(w);
    Var y = softplus(v * wc) + exp(scale(v, 0.3)) + log(v) + square(v) - abs(v - wc);
    y = relu(add_scalar(y, -0.1)) + neg(v);
    return sum(y);
  }, all_indices(x));
  CHECK(r.max_rel_err < 1e-6);
}

TEST_CASE("matmul gradients, shared and batched right operand") {
  std::mt19937_64 rng(12);
  Tensor a = random_tensor({2, 3, 4}, rng);
  const Tensor b_shared = random_tensor({4, 5}, rng);
  const Tensor b_batched = random_tensor({2, 4, 5}, rng);
  const Tensor weight = random_tensor({2, 3, 5}, rng);
  for (const Tensor* b : {&b_shared, &b_batched}) {
    const auto r = check_gradient(a, [&](Tape& t, const Var& v) {
      return sum(matmul(v, t.constant(*b)) * t.constant(weight));
    }, all_indices(a));
    CHECK(r.max_rel_err < 1e-7);
  }
  Tensor b = b_batched;
  const auto rb = check_gradient(b, [&](Tape& t, const Var& v) {
    return sum(matmul(t.constant(a), v) * t.constant(weight));
  }, all_indices(b));
  CHECK(rb.max_rel_err < 1e-7);
}

TEST_CASE("matmul value against a hand computation") {
  Tape tape;
  const Var a = tape.constant(Tensor(Shape{2, 2}, {1, 2, 3, 4}));
  const Var b = tape.constant(Tensor(Shape{2, 2}, {5, 6, 7, 8}));
  const Tensor c = matmul(a, b).value();
  CHECK(c.at(0, 0) == 19.0);
  CHECK(c.at(0, 1) == 22.0);
  CHECK(c.at(1, 0) == 43.0);
  CHECK(c.at(1, 1) == 50.0);
  CHECK_THROWS_AS(matmul(a, tape.constant(Tensor(Shape{3, 2}))), ShapeError);
}

TEST_CASE("dilated conv is causal and matches a direct sum") {
  std::mt19937_64 rng(13);
  const Tensor x = random_tensor({2, 3, 12}, rng);
  const Tensor w = random_tensor({4, 3, 2}, rng);
  const Tensor bias = random_tensor({4}, rng);
  const std::size_t d = 3;
  Tape tape;
  const Tensor y =
      conv1d_dilated(tape.constant(x), tape.constant(w), tape.constant(bias), d).value();
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t o = 0; o < 4; ++o) {
      for (std::size_t t = 0; t < 12; ++t) {
        double expect = bias[o];
        for (std::size_t i = 0; i < 3; ++i) {
          expect += w.at(o, i, 1) * x.at(s, i, t);
          if (t >= d) expect += w.at(o, i, 0) * x.at(s, i, t - d);
        }
        CHECK(y.at(s, o, t) == doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  // Perturbing the future leaves the past untouched.
  Tensor x2 = x;
  x2.at(0, 1, 9) += 5.0;
  const Tensor y2 =
      conv1d_dilated(tape.constant(x2), tape.constant(w), tape.constant(bias), d).value();
  for (std::size_t t = 0; t < 9; ++t) CHECK(y2.at(0, 2, t) == y.at(0, 2, t));
}

TEST_CASE("dilated conv gradients") {
  std::mt19937_64 rng(14);
  Tensor x = random_tensor({2, 3, 10}, rng);
  Tensor w = random_tensor({2, 3, 2}, rng);
  Tensor bias = random_tensor({2}, rng);
  const Tensor weight = random_tensor({2, 2, 10}, rng);
  auto rx = check_gradient(x, [&](Tape& t, const Var& v) {
    return sum(conv1d_dilated(v, t.constant(w), t.constant(bias), 2) * t.constant(weight));
  }, all_indices(x));
  auto rw = check_gradient(w, [&](Tape& t, const Var& v) {
    return sum(conv1d_dilated(t.constant(x), v, t.constant(bias), 2) * t.constant(weight));
  }, all_indices(w));
  auto rb = check_gradient(bias, [&](Tape& t, const Var& v) {
    return sum(conv1d_dilated(t.constant(x), t.constant(w), v, 2) * t.constant(weight));
  }, all_indices(bias));
  CHECK(rx.max_rel_err < 1e-7);
  CHECK(rw.max_rel_err < 1e-7);
  CHECK(rb.max_rel_err < 1e-7);
}

TEST_CASE("conv without bias") {
  Tape tape;
  const Var x = tape.constant(Tensor(Shape{1, 1, 3}, {1, 2, 3}));
  const Var w = tape.constant(Tensor(Shape{1, 1, 2}, {10, 1}));
  const Tensor y = conv1d_dilated(x, w, Var{}, 1).value();
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 12.0);
  CHECK(y[2] == 23.0);
}

TEST_CASE("shape ops: values and gradients") {
  std::mt19937_64 rng(15);
  Tensor x = random_tensor({2, 3, 4}, rng);
  const Tensor w6 = random_tensor({4, 3, 2}, rng);

  Tape tape;
  const Var xc = tape.constant(x);
  const std::array<std::size_t, 3> perm{2, 1, 0};
  const Tensor p = permute(xc, perm).value();
  CHECK(p.shape() == Shape{4, 3, 2});
  CHECK(p.at(3, 1, 0) == x.at(0, 1, 3));
  const Tensor sl = slice(xc, 2, 1, 3).value();
  CHECK(sl.shape() == Shape{2, 3, 2});
  CHECK(sl.at(1, 2, 0) == x.at(1, 2, 1));
  CHECK(sum(xc, 1).value().shape() == Shape{2, 4});
  CHECK(mean(xc, 2).value().at(0, 0) ==
        doctest::Approx((x.at(0, 0, 0) + x.at(0, 0, 1) + x.at(0, 0, 2) + x.at(0, 0, 3)) / 4));
  CHECK_THROWS_AS(slice(xc, 2, 3, 5), ShapeError);
  CHECK_THROWS_AS(reshape(xc, Shape{5, 5}), ShapeError);

  const auto r = check_gradient(x, [&](Tape& t, const Var& v) {
    const Var pv = permute(v, perm);
    const Var parts[] = {slice(v, 2, 0, 1), slice(v, 2, 2, 4)};
    const Var cat = concat(parts, 2);                       // [2,3,3]
    const Var rep = repeat(slice(v, 0, 0, 1), 0, 2);        // [2,3,4]
    const Var red = reshape(sum(v, 0), Shape{12});
    return sum(pv * t.constant(w6)) + sum(square(cat)) + sum(rep * v) + sum(square(red)) +
           mean(v);
  }, all_indices(x));
  CHECK(r.max_rel_err < 1e-7);
}

TEST_CASE("concat along a middle axis") {
  Tape tape;
  const Var a = tape.constant(Tensor(Shape{2, 1}, {1, 2}));
  const Var b = tape.constant(Tensor(Shape{2, 2}, {3, 4, 5, 6}));
  const Var parts[] = {a, b};
  const Tensor c = concat(parts, 1).value();
  CHECK(c.shape() == Shape{2, 3});
  CHECK(c.values()[3] == 2.0);
  CHECK(c.values()[5] == 6.0);
  const Var bad[] = {a, tape.constant(Tensor(Shape{3, 1}))};
  CHECK_THROWS_AS(concat(bad, 1), ShapeError);
}
