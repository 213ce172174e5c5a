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
#include <vector>

#include "immunekit/rng.hpp"

using namespace immunekit;

TEST_CASE("identical seeds replay identical draws") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("named substreams are independent of sibling consumption") {
  Rng root(9);
  Rng s1 = root.stream("shuffle");
  // Consuming another substream must not perturb this one.
  Rng other = root.stream("init");
  for (int i = 0; i < 50; ++i) other.next_u64();
  Rng s1_again = Rng(9).stream("shuffle");
  for (int i = 0; i < 50; ++i) CHECK(s1.next_u64() == s1_again.next_u64());
}

TEST_CASE("different names give different streams") {
  CHECK(Rng(1).stream("a").next_u64() != Rng(1).stream("b").next_u64());
  CHECK(Rng(1).stream("a", 0).next_u64() != Rng(1).stream("a", 1).next_u64());
}

TEST_CASE("uniform stays in [0,1) and is roughly centered") {
  Rng r(3);
  double sum = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(sum / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("normal has near-zero mean and unit-ish variance") {
  Rng r(4);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double z = r.normal();
    sum += z;
    sq += z * z;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(0.05));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("below never reaches n; shuffle is a permutation") {
  Rng r(5);
  for (int i = 0; i < 1000; ++i) CHECK(r.below(7) < 7);
  std::vector<int> v = {0, 1, 2, 3, 4, 5, 6, 7};
  Rng s(6);
  s.shuffle(v);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>({0, 1, 2, 3, 4, 5, 6, 7}));
}
