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
#ifndef IMMUNEKIT_DATA_HPP_
#define IMMUNEKIT_DATA_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "immunekit/tensor.hpp"

namespace immunekit {

// Flat pixel vector in [0,1] plus ground-truth label.
struct Example {
  Tensor x;
  int label = 0;

  bool operator==(const Example& o) const { return label == o.label && x == o.x; }
};

struct Dataset {
  std::vector<Example> examples;
  std::size_t rows = 0;  // image geometry, kept for windowed quality metrics
  std::size_t cols = 0;
  int classes = 0;

  std::size_t size() const { return examples.size(); }
  std::size_t dim() const { return rows * cols; }
};

// Parses the big-endian IDX pair (images magic 0x00000803, labels magic
// 0x00000801). Pixels are scaled to [0,1]. Malformed input always throws;
// no partial datasets are ever returned.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path);
Dataset parse_mnist_idx(const std::vector<std::uint8_t>& images,
                        const std::vector<std::uint8_t>& labels);

// Deterministic Gaussian class blobs in [0,1]^n, linearly separable at the
// default spread. n must be a perfect square (images are rows x cols).
Dataset synth_dataset(std::uint64_t seed, std::size_t per_class, std::size_t n,
                      int classes, double spread = 0.06);

struct Splits {
  Dataset train;
  Dataset val;
  Dataset test;
};

// Deterministic disjoint cover; fractions must sum to 1.
Splits split(const Dataset& data, double f_train, double f_val, double f_test,
             std::uint64_t seed);

}  // namespace immunekit

#endif  // IMMUNEKIT_DATA_HPP_
