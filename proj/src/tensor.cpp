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
#include "immunekit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace immunekit {

Tensor::Tensor(std::vector<std::size_t> s) : shape(std::move(s)) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  v.assign(n, 0.0);
}

Tensor Tensor::vec(std::vector<double> values) {
  Tensor t;
  t.shape = {values.size()};
  t.v = std::move(values);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << "]";
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (!a.same_shape(b))
    throw StructuralError(what + ": shape mismatch " + shape_str(a.shape) +
                          " vs " + shape_str(b.shape));
}

Tensor clip_to_ball(const Tensor& x, const Tensor& center, double tau, double lo,
                    double hi) {
  require_same_shape(x, center, "clip_to_ball");
  if (tau < 0.0) throw UsageError("clip_to_ball: tau must be >= 0");
  if (lo > hi) throw UsageError("clip_to_ball: lo > hi");
  Tensor out = x;
  for (std::size_t k = 0; k < out.numel(); ++k) {
    double m = std::max({x.v[k], center.v[k] - tau, lo});
    out.v[k] = std::min({m, center.v[k] + tau, hi});
  }
  return out;
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& eval,
                        const Tensor& point, double h) {
  if (h <= 0.0) throw UsageError("finite_diff_grad: h must be > 0");
  Tensor grad(point.shape);
  Tensor p = point;
  for (std::size_t k = 0; k < p.numel(); ++k) {
    const double saved = p.v[k];
    p.v[k] = saved + h;
    const double up = eval(p);
    p.v[k] = saved - h;
    const double dn = eval(p);
    p.v[k] = saved;
    if (!std::isfinite(up) || !std::isfinite(dn))
      throw NumericError("finite_diff_grad: non-finite evaluation at dimension " +
                         std::to_string(k));
    grad.v[k] = (up - dn) / (2.0 * h);
  }
  return grad;
}

}  // namespace immunekit
