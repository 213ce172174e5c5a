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

#include "immunekit/metrics.hpp"
#include "immunekit/rng.hpp"

using namespace immunekit;

namespace {

OutcomeRecord rec(bool a_raw, bool a_adv, bool b_raw, bool b_adv, int label = 0,
                  int target = -1) {
  OutcomeRecord r;
  r.label = label;
  if (target >= 0) r.target = target;
  r.raw_correct = a_raw;
  r.raw_adv_correct = a_adv;
  r.ie_correct = b_raw;
  r.ie_adv_correct = b_adv;
  return r;
}

std::vector<OutcomeRecord> fuzz_records(Rng& rng, std::size_t n) {
  std::vector<OutcomeRecord> v;
  for (std::size_t i = 0; i < n; ++i) {
    OutcomeRecord r = rec(rng.below(2), rng.below(2), rng.below(2), rng.below(2),
                          int(rng.below(4)));
    r.id = i;
    v.push_back(r);
  }
  return v;
}

// Independent brute-force set computation (deliberately avoids the library's
// per-record loop structure).
struct Oracle {
  std::vector<std::size_t> a1, a2, b1, b2;
  static Oracle build(const std::vector<OutcomeRecord>& rs) {
    Oracle o;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      const OutcomeRecord& r = rs[i];
      if (*r.raw_correct && *r.raw_adv_correct) o.a1.push_back(i);
      if (*r.raw_correct && !*r.raw_adv_correct) o.a2.push_back(i);
      if (*r.ie_correct && *r.ie_adv_correct) o.b1.push_back(i);
      if (*r.ie_correct && !*r.ie_adv_correct) o.b2.push_back(i);
    }
    return o;
  }
  static std::vector<std::size_t> inter(const std::vector<std::size_t>& x,
                                        const std::vector<std::size_t>& y) {
    std::vector<std::size_t> out;
    for (std::size_t e : x)
      if (std::find(y.begin(), y.end(), e) != y.end()) out.push_back(e);
    return out;
  }
};

}  // namespace

TEST_CASE("asr: 50/50 split gives 0.5; no fooled examples gives 0") {
  std::vector<OutcomeRecord> rs;
  for (int i = 0; i < 50; ++i) rs.push_back(rec(true, true, true, true));
  for (int i = 0; i < 50; ++i) rs.push_back(rec(true, false, true, true));
  CHECK(asr(rs, Side::kRaw, false) == 0.5);
  std::vector<OutcomeRecord> clean(rs.begin(), rs.begin() + 50);
  CHECK(asr(clean, Side::kRaw, false) == 0.0);
}

TEST_CASE("asr ignores misclassified base images") {
  std::vector<OutcomeRecord> rs = {rec(true, false, true, true),
                                   rec(false, false, true, true),
                                   rec(false, true, true, true)};
  CHECK(asr(rs, Side::kRaw, false) == 1.0);
}

TEST_CASE("asr with an empty denominator is an explicit error") {
  std::vector<OutcomeRecord> rs = {rec(false, true, true, true)};
  CHECK_THROWS_AS(asr(rs, Side::kRaw, false), UndefinedMetricError);
}

TEST_CASE("vasr: equal sides give 0; 0.964 raw vs 0 immune gives 0.964") {
  std::vector<OutcomeRecord> rs;
  for (int i = 0; i < 241; ++i) rs.push_back(rec(true, false, true, true));
  for (int i = 0; i < 9; ++i) rs.push_back(rec(true, true, true, true));
  CHECK(asr(rs, Side::kRaw, false) == doctest::Approx(0.964).epsilon(1e-12));
  CHECK(asr(rs, Side::kImmune, false) == 0.0);
  CHECK(vasr(rs, false) == doctest::Approx(0.964).epsilon(1e-12));
  std::vector<OutcomeRecord> same = {rec(true, false, true, false),
                                     rec(true, true, true, true)};
  CHECK(vasr(same, false) == 0.0);
}

TEST_CASE("immune rate boundary cases") {
  // B1 empty: every IE-correct record still gets attacked successfully.
  std::vector<OutcomeRecord> b1_empty = {rec(true, false, true, false),
                                         rec(true, false, true, false)};
  CHECK(immune_rate(b1_empty, false) == 0.0);
  // B2 empty: all adversarial examples of IEs fail.
  std::vector<OutcomeRecord> b2_empty = {rec(true, false, true, true),
                                         rec(true, false, true, true)};
  CHECK(immune_rate(b2_empty, false) == 1.0);
  // 3 of 4.
  std::vector<OutcomeRecord> three_quarters = {
      rec(true, false, true, true), rec(true, false, true, true),
      rec(true, false, true, true), rec(true, false, true, false)};
  CHECK(immune_rate(three_quarters, false) == 0.75);
  // Denominator empty entirely.
  std::vector<OutcomeRecord> empty = {rec(true, false, false, true)};
  CHECK_THROWS_AS(immune_rate(empty, false), UndefinedMetricError);
}

TEST_CASE("fuzzed outcome sets match the brute-force oracle exactly") {
  Rng rng(55);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<OutcomeRecord> rs = fuzz_records(rng, 32);
    Oracle o = Oracle::build(rs);
    const auto a12 = o.a1.size() + o.a2.size();
    if (a12 > 0)
      CHECK(asr(rs, Side::kRaw, false) == double(o.a2.size()) / double(a12));
    const auto b12 = o.b1.size() + o.b2.size();
    if (b12 > 0)
      CHECK(asr(rs, Side::kImmune, false) == double(o.b2.size()) / double(b12));
    auto num = Oracle::inter(o.a2, o.b1);
    std::vector<std::size_t> b12v = o.b1;
    b12v.insert(b12v.end(), o.b2.begin(), o.b2.end());
    auto den = Oracle::inter(o.a2, b12v);
    if (!den.empty()) {
      const double ir = immune_rate(rs, false);
      CHECK(ir == double(num.size()) / double(den.size()));
      CHECK(ir >= 0.0);
      CHECK(ir <= 1.0);
    }
    if (a12 > 0 && b12 > 0) {
      const double v = vasr(rs, false);
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("targeted exclusion: records with y == target never change metrics") {
  Rng rng(66);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<OutcomeRecord> rs;
    for (int i = 0; i < 24; ++i) {
      OutcomeRecord r = rec(rng.below(2), rng.below(2), rng.below(2),
                            rng.below(2), 1 + int(rng.below(3)), 0);
      rs.push_back(r);
    }
    std::vector<OutcomeRecord> padded = rs;
    for (int i = 0; i < 8; ++i)
      padded.push_back(rec(rng.below(2), rng.below(2), rng.below(2),
                           rng.below(2), 0, 0));
    auto same = [&](auto fn) {
      bool threw_a = false, threw_b = false;
      double a = 0, b = 0;
      try { a = fn(rs); } catch (const UndefinedMetricError&) { threw_a = true; }
      try { b = fn(padded); } catch (const UndefinedMetricError&) { threw_b = true; }
      CHECK(threw_a == threw_b);
      if (!threw_a) CHECK(a == b);
    };
    same([](const auto& r) { return asr(r, Side::kRaw, true); });
    same([](const auto& r) { return vasr(r, true); });
    same([](const auto& r) { return immune_rate(r, true); });
  }
}

TEST_CASE("uiqi: identical non-constant images give exactly 1") {
  Rng rng(9);
  Tensor x({64});
  for (double& v : x.v) v = rng.uniform(0.0, 1.0);
  CHECK(uiqi(x, x, 8, 8) == 1.0);
}

TEST_CASE("uiqi is symmetric and in [-1, 1]") {
  Rng rng(10);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor x({64}), y({64});
    for (double& v : x.v) v = rng.uniform(0.0, 1.0);
    for (double& v : y.v) v = rng.uniform(0.0, 1.0);
    const double q1 = uiqi(x, y, 8, 8);
    const double q2 = uiqi(y, x, 8, 8);
    CHECK(std::fabs(q1 - q2) < 1e-12);
    CHECK(q1 >= -1.0 - 1e-12);
    CHECK(q1 <= 1.0 + 1e-12);
  }
}

TEST_CASE("uiqi: ramp patch vs ramp+0.1 matches a direct evaluation, < 1") {
  Tensor x({64}), y({64});
  for (std::size_t k = 0; k < 64; ++k) {
    x.v[k] = double(k) / 63.0 * 0.8;
    y.v[k] = x.v[k] + 0.1;
  }
  // Direct closed-form evaluation on the single 8x8 window.
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t k = 0; k < 64; ++k) {
    sx += x.v[k];
    sy += y.v[k];
    sxx += x.v[k] * x.v[k];
    syy += y.v[k] * y.v[k];
    sxy += x.v[k] * y.v[k];
  }
  const double n = 64.0, mx = sx / n, my = sy / n;
  const double vx = sxx / n - mx * mx, vy = syy / n - my * my;
  const double cov = sxy / n - mx * my;
  const double expect = 4 * cov * mx * my / ((vx + vy) * (mx * mx + my * my));
  const double got = uiqi(x, y, 8, 8);
  CHECK(got == doctest::Approx(expect).epsilon(1e-12));
  CHECK(got < 1.0);
}

TEST_CASE("uiqi degenerate windows follow the stated rules") {
  // Constant equal patches: both factors zero in every window -> all skipped.
  Tensor c({16});
  for (double& v : c.v) v = 0.0;
  CHECK_THROWS_AS(uiqi(c, c, 4, 4, 4, 1), UndefinedMetricError);
  // Constant but different: variance factor zero, means differ -> 0.
  Tensor c2({16});
  for (double& v : c2.v) v = 0.4;
  Tensor c3({16});
  for (double& v : c3.v) v = 0.6;
  CHECK(uiqi(c2, c3, 4, 4, 4, 1) == 0.0);
  // Constant and identical nonzero: contributes 1.
  CHECK(uiqi(c2, c2, 4, 4, 4, 1) == 1.0);
}

TEST_CASE("uiqi rejects oversized windows") {
  Tensor x({16});
  CHECK_THROWS_AS(uiqi(x, x, 4, 4, 8, 1), UsageError);
}

TEST_CASE("linf_of_ip instances and brute-force agreement") {
  CHECK(linf_of_ip(Tensor({5})) == 0.0);
  Tensor one({3});
  one.v[1] = 32.0 / 255.0;
  CHECK(linf_of_ip(one) == doctest::Approx(32.0).epsilon(1e-12));
  Rng rng(11);
  Tensor r({40});
  for (double& v : r.v) v = rng.uniform(-0.3, 0.3);
  double mx = 0.0;
  for (double v : r.v) mx = std::max(mx, std::fabs(v));
  CHECK(linf_of_ip(r) == 255.0 * mx);
}

TEST_CASE("metrics demand the verdicts they need") {
  OutcomeRecord r;
  r.raw_correct = true;  // everything else missing
  std::vector<OutcomeRecord> rs = {r};
  CHECK_THROWS_AS(asr(rs, Side::kRaw, false), UsageError);
  CHECK_THROWS_AS(immune_rate(rs, false), UsageError);
}
