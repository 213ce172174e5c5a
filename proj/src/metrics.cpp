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
#include "immunekit/metrics.hpp"

#include <cmath>

namespace immunekit {

std::vector<OutcomeRecord> classify_outcomes(const ModelParams& f,
                                             const std::vector<Example>& examples,
                                             const AttackModel& g,
                                             const std::vector<Tensor>* ies) {
  if (ies && ies->size() != examples.size())
    throw UsageError("classify_outcomes: ies count does not match examples");
  std::vector<OutcomeRecord> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    OutcomeRecord r;
    r.id = i;
    r.label = ex.label;
    if (g.target >= 0) r.target = g.target;
    r.raw_correct = predict(f, ex.x).class_id == ex.label;
    r.raw_adv_correct = predict(f, apply_attack(g, ex.x)).class_id == ex.label;
    if (ies) {
      const Tensor& xie = (*ies)[i];
      r.ie_correct = predict(f, xie).class_id == ex.label;
      r.ie_adv_correct = predict(f, apply_attack(g, xie)).class_id == ex.label;
    }
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

bool need(const std::optional<bool>& v, const char* what) {
  if (!v) throw UsageError(std::string("metrics: missing verdict: ") + what);
  return *v;
}

}  // namespace

double asr(const std::vector<OutcomeRecord>& records, Side side, bool targeted) {
  std::size_t num = 0, den = 0;
  for (const OutcomeRecord& r : records) {
    if (targeted && r.excluded_targeted()) continue;
    const bool base = side == Side::kRaw ? need(r.raw_correct, "raw")
                                         : need(r.ie_correct, "ie");
    const bool adv = side == Side::kRaw ? need(r.raw_adv_correct, "raw-adv")
                                        : need(r.ie_adv_correct, "ie-adv");
    if (!base) continue;  // misclassified base images are ignored
    ++den;
    if (!adv) ++num;
  }
  if (den == 0)
    throw UndefinedMetricError("asr: no correctly classified base images");
  return double(num) / double(den);
}

double vasr(const std::vector<OutcomeRecord>& records, bool targeted) {
  return asr(records, Side::kRaw, targeted) - asr(records, Side::kImmune, targeted);
}

double immune_rate(const std::vector<OutcomeRecord>& records, bool targeted) {
  std::size_t num = 0, den = 0;
  for (const OutcomeRecord& r : records) {
    if (targeted && r.excluded_targeted()) continue;
    const bool in_a2 =
        need(r.raw_correct, "raw") && !need(r.raw_adv_correct, "raw-adv");
    if (!in_a2) continue;
    const bool in_b1 =
        need(r.ie_correct, "ie") && need(r.ie_adv_correct, "ie-adv");
    const bool in_b12 = need(r.ie_correct, "ie");  // B1 u B2 = {ie correct}
    if (in_b12) ++den;
    if (in_b1) ++num;
  }
  if (den == 0)
    throw UndefinedMetricError("immune_rate: A2 n (B1 u B2) is empty");
  return double(num) / double(den);
}

double uiqi(const Tensor& x, const Tensor& y, std::size_t rows, std::size_t cols,
            std::size_t window, std::size_t stride) {
  require_same_shape(x, y, "uiqi");
  if (x.numel() != rows * cols)
    throw UsageError("uiqi: rows*cols does not match tensor size");
  if (window == 0 || stride == 0 || window > rows || window > cols)
    throw UsageError("uiqi: invalid window or stride for image size");

  double total = 0.0;
  std::size_t windows = 0;
  for (std::size_t r0 = 0; r0 + window <= rows; r0 += stride) {
    for (std::size_t c0 = 0; c0 + window <= cols; c0 += stride) {
      const double n = double(window * window);
      double sx = 0.0, sy = 0.0;
      double xmin = x.v[r0 * cols + c0], xmax = xmin;
      double ymin = y.v[r0 * cols + c0], ymax = ymin;
      bool identical = true;
      for (std::size_t r = r0; r < r0 + window; ++r) {
        for (std::size_t c = c0; c < c0 + window; ++c) {
          const double a = x.v[r * cols + c], b = y.v[r * cols + c];
          if (a != b) identical = false;
          sx += a;
          sy += b;
          xmin = std::min(xmin, a);
          xmax = std::max(xmax, a);
          ymin = std::min(ymin, b);
          ymax = std::max(ymax, b);
        }
      }
      // A constant patch has exactly zero variance; forcing the mean to the
      // constant keeps the centered pass free of summation round-off so the
      // degenerate branches below actually trigger.
      const bool x_const = xmin == xmax, y_const = ymin == ymax;
      const double mx = x_const ? xmin : sx / n;
      const double my = y_const ? ymin : sy / n;
      double vx = 0.0, vy = 0.0, cov = 0.0;
      for (std::size_t r = r0; r < r0 + window; ++r) {
        for (std::size_t c = c0; c < c0 + window; ++c) {
          const double da = x.v[r * cols + c] - mx, db = y.v[r * cols + c] - my;
          vx += da * da;
          vy += db * db;
          cov += da * db;
        }
      }
      vx /= n;
      vy /= n;
      cov /= n;
      const double f_var = vx + vy, f_mean = mx * mx + my * my;
      double q;
      if (f_var == 0.0 && f_mean == 0.0) continue;  // both-zero windows skipped
      if (f_var == 0.0 || f_mean == 0.0)
        q = identical ? 1.0 : 0.0;
      else
        q = 4.0 * cov * mx * my / (f_var * f_mean);
      total += q;
      ++windows;
    }
  }
  if (windows == 0)
    throw UndefinedMetricError("uiqi: every window was degenerate");
  return total / double(windows);
}

double linf_of_ip(const Tensor& ip) { return 255.0 * ip.max_abs(); }

EvalReport build_eval_report(const ModelParams& f,
                             const std::vector<Example>& examples,
                             const AttackModel& g, const std::vector<Tensor>& ies,
                             std::size_t rows, std::size_t cols) {
  EvalReport rep;
  rep.records = classify_outcomes(f, examples, g, &ies);
  const bool targeted = g.target >= 0;

  std::size_t ie_correct = 0, counted = 0;
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const OutcomeRecord& r = rep.records[i];
    if (targeted && r.excluded_targeted()) continue;
    ++counted;
    const int a_cell = (*r.raw_correct ? 0 : 2) + (*r.raw_adv_correct ? 0 : 1);
    const int b_cell = (*r.ie_correct ? 0 : 2) + (*r.ie_adv_correct ? 0 : 1);
    ++rep.a[a_cell];
    ++rep.b[b_cell];
    if (a_cell == 1 && b_cell == 0) ++rep.a2_b1;
    if (a_cell == 1 && b_cell <= 1) ++rep.a2_b12;
    if (*r.ie_correct) ++ie_correct;
  }
  if (counted == 0) throw UndefinedMetricError("eval report: no examples counted");
  rep.ie_accuracy = double(ie_correct) / double(counted);
  rep.asr_raw = asr(rep.records, Side::kRaw, targeted);
  rep.asr_ie = asr(rep.records, Side::kImmune, targeted);
  rep.vasr = rep.asr_raw - rep.asr_ie;
  rep.ir = immune_rate(rep.records, targeted);

  double uiqi_sum = 0.0, linf_sum = 0.0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    uiqi_sum += uiqi(examples[i].x, ies[i], rows, cols,
                     std::min<std::size_t>(8, std::min(rows, cols)), 1);
    Tensor ip(ies[i].shape);
    for (std::size_t k = 0; k < ip.numel(); ++k)
      ip.v[k] = ies[i].v[k] - examples[i].x.v[k];
    const double linf = linf_of_ip(ip);
    linf_sum += linf;
    rep.linf_max = std::max(rep.linf_max, linf);
  }
  rep.uiqi_mean = uiqi_sum / double(examples.size());
  rep.linf_mean = linf_sum / double(examples.size());
  return rep;
}

}  // namespace immunekit
