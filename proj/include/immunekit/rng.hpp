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
#ifndef IMMUNEKIT_RNG_HPP_
#define IMMUNEKIT_RNG_HPP_

#include <cstdint>
#include <string_view>
#include <vector>

namespace immunekit {

// Splittable deterministic generator. Every stochastic consumer takes a named
// substream derived from (seed, name), so adding one consumer never perturbs
// the draws of another. SplitMix64 core; distributions are hand-rolled to stay
// independent of standard-library implementation details.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derived substream. Names are free-form; "craft/ex17" style paths are the
  // convention used across the project.
  Rng stream(std::string_view name) const;
  Rng stream(std::string_view name, std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller (no cached spare; fully stateless per call
  // pair).
  double normal();
  // Uniform index in [0, n).
  std::size_t below(std::size_t n);

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace immunekit

#endif  // IMMUNEKIT_RNG_HPP_
