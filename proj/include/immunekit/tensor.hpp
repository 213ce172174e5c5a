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
#ifndef IMMUNEKIT_TENSOR_HPP_
#define IMMUNEKIT_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "immunekit/errors.hpp"

namespace immunekit {

// Dense row-major 64-bit tensor. Rank is usually 1 (vectors) or 2 (weight
// matrices); no broadcasting beyond what the graph ops define.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> s);
  static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
  static Tensor vec(std::vector<double> values);

  std::size_t numel() const { return v.size(); }
  double& at(std::size_t i) { return v[i]; }
  double at(std::size_t i) const { return v[i]; }
  // Rank-2 access, row-major.
  double& at(std::size_t r, std::size_t c) { return v[r * shape[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * shape[1] + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;
  double max_abs() const;

  bool operator==(const Tensor& o) const { return shape == o.shape && v == o.v; }
};

std::string shape_str(const std::vector<std::size_t>& shape);

// Throws StructuralError when shapes differ; `what` names the operation.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what);

// Elementwise min(max(x, center - tau, lo), center + tau, hi). Idempotent;
// output is within the tau-ball of center and inside [lo, hi].
Tensor clip_to_ball(const Tensor& x, const Tensor& center, double tau, double lo,
                    double hi);

// Central-difference gradient of a scalar function, one dimension at a time.
// The independent oracle for every analytic gradient in this project.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& eval,
                        const Tensor& point, double h);

}  // namespace immunekit

#endif  // IMMUNEKIT_TENSOR_HPP_
