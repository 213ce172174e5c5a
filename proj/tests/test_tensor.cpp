/* Copyright 2026 The ImmuneKit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <doctest.h>

#include <cmath>

#include "immunekit/rng.hpp"
#include "immunekit/tensor.hpp"

using namespace immunekit;

TEST_CASE("clip_to_ball hits the ball boundary") {
  Tensor x = Tensor::vec({0.7});
  Tensor c = Tensor::vec({0.5});
  CHECK(clip_to_ball(x, c, 0.1, 0.0, 1.0).v[0] == 0.5 + 0.1);
}

TEST_CASE("clip_to_ball leaves interior points unchanged") {
  Tensor x = Tensor::vec({0.55, 0.45, 0.5});
  Tensor c = Tensor::vec({0.5, 0.5, 0.5});
  CHECK(clip_to_ball(x, c, 0.1, 0.0, 1.0) == x);
}

TEST_CASE("clip_to_ball: pixel range binds before the ball") {
  Tensor x = Tensor::vec({1.2});
  Tensor c = Tensor::vec({1.0});
  CHECK(clip_to_ball(x, c, 0.5, 0.0, 1.0).v[0] == 1.0);
}

TEST_CASE("clip_to_ball is exactly idempotent") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor x({16}), c({16});
    for (std::size_t k = 0; k < 16; ++k) {
      x.v[k] = rng.uniform(-0.5, 1.5);
      c.v[k] = rng.uniform(0.0, 1.0);
    }
    Tensor once = clip_to_ball(x, c, 0.2, 0.0, 1.0);
    CHECK(clip_to_ball(once, c, 0.2, 0.0, 1.0) == once);
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(std::fabs(once.v[k] - c.v[k]) <= 0.2 + 1e-15);
      CHECK(once.v[k] >= 0.0);
      CHECK(once.v[k] <= 1.0);
    }
  }
}

TEST_CASE("clip_to_ball rejects shape mismatch") {
  CHECK_THROWS_AS(clip_to_ball(Tensor({2}), Tensor({3}), 0.1, 0.0, 1.0),
                  StructuralError);
}

TEST_CASE("finite_diff_grad: sum of squares") {
  auto eval = [](const Tensor& p) {
    double s = 0.0;
    for (double v : p.v) s += v * v;
    return s;
  };
  Tensor g = finite_diff_grad(eval, Tensor::vec({1.0, 2.0}), 1e-5);
  CHECK(g.v[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(g.v[1] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("finite_diff_grad: constant function") {
  Tensor g = finite_diff_grad([](const Tensor&) { return 3.5; },
                              Tensor::vec({1.0, -1.0, 0.0}), 1e-5);
  for (double v : g.v) CHECK(v == 0.0);
}

TEST_CASE("finite_diff_grad flags non-finite evaluations") {
  auto bad = [](const Tensor& p) { return 1.0 / (p.v[0] - p.v[0]); };
  CHECK_THROWS_AS(finite_diff_grad(bad, Tensor::vec({1.0}), 1e-5), NumericError);
}

TEST_CASE("tensor invariant: shape product equals value count") {
  Tensor t({3, 4});
  CHECK(t.numel() == 12);
  CHECK(t.all_finite());
}
