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
#ifndef IMMUNEKIT_METRICS_HPP_
#define IMMUNEKIT_METRICS_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "immunekit/attack.hpp"
#include "immunekit/data.hpp"
#include "immunekit/model.hpp"

namespace immunekit {

// One example's verdicts across the four evaluation stages. The confusion
// cells are A1 = {raw T, raw-adv T}, A2 = {T, F}, A3 = {F, T}, A4 = {F, F},
// and B1..B4 analogously for the immune-side pair.
struct OutcomeRecord {
  std::size_t id = 0;
  int label = 0;
  std::optional<int> target;  // targeted attacks only
  std::optional<bool> raw_correct;     // f(x) == y
  std::optional<bool> raw_adv_correct; // f(g(x)) == y
  std::optional<bool> ie_correct;      // f(x_ie) == y
  std::optional<bool> ie_adv_correct;  // f(g(x_ie)) == y

  // Targeted metrics drop examples whose ground truth is the target.
  bool excluded_targeted() const { return target && label == *target; }
};

enum class Side { kRaw, kImmune };

// Runs f over x, g(x), and (when ies is given) x_ie, g(x_ie).
std::vector<OutcomeRecord> classify_outcomes(const ModelParams& f,
                                             const std::vector<Example>& examples,
                                             const AttackModel& g,
                                             const std::vector<Tensor>* ies);

// |A2| / |A1 u A2| on the chosen side; misclassified base images drop out of
// both numerator and denominator.
double asr(const std::vector<OutcomeRecord>& records, Side side, bool targeted);

// asr(raw) - asr(immune).
double vasr(const std::vector<OutcomeRecord>& records, bool targeted);

// |A2 n B1| / |A2 n (B1 u B2)|, intersected per example.
double immune_rate(const std::vector<OutcomeRecord>& records, bool targeted);

// Universal image quality index: windowed
// Q = 4*cov*mx*my / ((vx+vy) * (mx^2+my^2)) averaged over all windows.
// Degenerate windows: both factors zero -> skipped; one factor zero -> 0,
// or 1 when the patches are identical.
double uiqi(const Tensor& x, const Tensor& y, std::size_t rows, std::size_t cols,
            std::size_t window = 8, std::size_t stride = 1);

// 255 * max|ip_k|.
double linf_of_ip(const Tensor& ip);

struct EvalReport {
  std::vector<OutcomeRecord> records;
  std::size_t a[4] = {0, 0, 0, 0};  // |A1..A4|
  std::size_t b[4] = {0, 0, 0, 0};  // |B1..B4|
  std::size_t a2_b1 = 0;            // |A2 n B1|
  std::size_t a2_b12 = 0;           // |A2 n (B1 u B2)|
  double ie_accuracy = 0.0;
  double asr_raw = 0.0;
  double asr_ie = 0.0;
  double vasr = 0.0;
  double ir = 0.0;
  double uiqi_mean = 0.0;
  double linf_max = 0.0;
  double linf_mean = 0.0;
};

// Full per-example evaluation of a crafted IE set against one target attack.
EvalReport build_eval_report(const ModelParams& f,
                             const std::vector<Example>& examples,
                             const AttackModel& g, const std::vector<Tensor>& ies,
                             std::size_t rows, std::size_t cols);

}  // namespace immunekit

#endif  // IMMUNEKIT_METRICS_HPP_
