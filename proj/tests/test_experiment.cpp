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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "immunekit/experiment.hpp"
#include "immunekit/rng.hpp"

using namespace immunekit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

nlohmann::json base_dataset() {
  return {{"kind", "synthetic"}, {"per_class", 60}, {"n", 16}, {"classes", 2}};
}

struct TempDir {
  fs::path p;
  explicit TempDir(const std::string& name) : p(fs::temp_directory_path() / name) {
    fs::remove_all(p);
    fs::create_directories(p);
  }
  ~TempDir() { fs::remove_all(p); }
  std::string str() const { return p.string(); }
};

}  // namespace

TEST_CASE("config: schema version is mandatory") {
  nlohmann::json j = {{"dataset", base_dataset()}};
  CHECK_THROWS_AS(parse_config(j, "craft"), ConfigError);
  j["schema"] = 2;
  CHECK_THROWS_AS(parse_config(j, "craft"), ConfigError);
}

TEST_CASE("config: unknown keys are rejected at every level") {
  nlohmann::json j = {{"schema", 1},
                      {"dataset", base_dataset()},
                      {"classifier", {{"hidden", {16}}, {"bogus", 1}}}};
  CHECK_THROWS_AS(parse_config(j, "train-classifier"), ConfigError);
  nlohmann::json k = {{"schema", 1}, {"dataset", base_dataset()}, {"extra", 0}};
  CHECK_THROWS_AS(parse_config(k, "train-classifier"), ConfigError);
}

TEST_CASE("config: sweep grid must be non-empty ascending") {
  nlohmann::json j = {{"schema", 1},
                      {"dataset", base_dataset()},
                      {"classifier_path", "x"},
                      {"source_attack", "y"},
                      {"immune", {{"method", "GSD"}}},
                      {"sweep", {{"param", "tau"}, {"grid", {3, 2}}}}};
  CHECK_THROWS_AS(parse_config(j, "ablate"), ConfigError);
}

TEST_CASE("config: zero attack eps is rejected") {
  nlohmann::json j = {{"schema", 1},
                      {"dataset", base_dataset()},
                      {"classifier_path", "x"},
                      {"attack", {{"kind", "perturb-generator"}, {"eps", 0.0}}}};
  CHECK_THROWS_AS(parse_config(j, "train-attack"), ConfigError);
}

TEST_CASE("tensor archive round trips bit-exactly") {
  Rng rng(3);
  std::vector<Tensor> ts;
  for (int i = 0; i < 5; ++i) {
    Tensor t({7});
    for (double& v : t.v) v = rng.uniform(-1.0, 1.0);
    ts.push_back(t);
  }
  TempDir dir("ik-archive-test");
  const std::string path = dir.str() + "/a.tns";
  save_tensor_archive(ts, path);
  std::vector<Tensor> back = load_tensor_archive(path);
  REQUIRE(back.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) CHECK(back[i] == ts[i]);
}

TEST_CASE("tensor archive detects tampering") {
  TempDir dir("ik-tamper-test");
  const std::string path = dir.str() + "/a.tns";
  save_tensor_archive({Tensor::vec({1.0, 2.0})}, path);
  std::string content = slurp(path);
  content[content.find("1,2") != std::string::npos ? content.find('1')
                                                   : content.size() - 10] = '7';
  {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << content;
  }
  CHECK_THROWS_AS(load_tensor_archive(path), Error);
}

TEST_CASE("report CSV columns are pinned") {
  CHECK(report_csv_header() ==
        "method,source_attack,target_attack,is_whitebox,n_eval,accuracy,"
        "asr_raw,asr_ie,vasr,ir,uiqi_mean,linf_max,seed");
}

TEST_CASE("output lock excludes concurrent runs") {
  TempDir dir("ik-lock-test");
  {
    OutputLock lock(dir.str());
    CHECK_THROWS_AS(OutputLock(dir.str()), StateError);
  }
  OutputLock again(dir.str());  // released on scope exit
}

TEST_CASE("end-to-end: train, attack, craft, evaluate, ablate") {
  TempDir cls("ik-e2e-cls"), atk("ik-e2e-atk"), crf("ik-e2e-craft"),
      ev1("ik-e2e-eval1"), ev2("ik-e2e-eval2"), abl("ik-e2e-abl");

  ExperimentConfig tc;
  tc.dataset.kind = "synthetic";
  tc.dataset.per_class = 120;
  tc.dataset.n = 16;
  tc.dataset.classes = 2;
  tc.hidden = {16};
  tc.epochs = 30;
  tc.accuracy_floor = 0.95;
  REQUIRE(cmd_train_classifier(tc, 42, cls.str()) == 0);

  ExperimentConfig ta = tc;
  ta.classifier_path = cls.str() + "/classifier.weights";
  ta.attack_kind = "perturb-generator";
  ta.attack_eps = 0.3;
  ta.epochs = 10;
  ta.lr = 1e-2;
  ta.asr_floor = 0.5;
  REQUIRE(cmd_train_attack(ta, 42, atk.str()) == 0);

  ExperimentConfig cc = tc;
  cc.classifier_path = ta.classifier_path;
  cc.source_attack_path = atk.str() + "/attack.atk";
  cc.immune.method = Method::kGsd;
  cc.immune.tau = 64;
  cc.immune.alpha = 16;
  cc.immune.iterations = 2;
  cc.n_eval = 16;
  REQUIRE(cmd_craft(cc, 42, crf.str()) == 0);

  ExperimentConfig ec = cc;
  ec.ie_archive_path = crf.str() + "/ies.tns";
  REQUIRE(cmd_evaluate(ec, 42, ev1.str()) == 0);
  REQUIRE(cmd_evaluate(ec, 42, ev2.str()) == 0);

  // Determinism: byte-identical reports across reruns.
  CHECK(slurp(ev1.str() + "/report.csv") == slurp(ev2.str() + "/report.csv"));
  CHECK(slurp(ev1.str() + "/report.json") == slurp(ev2.str() + "/report.json"));
  CHECK(slurp(ev1.str() + "/outcomes_0.csv") == slurp(ev2.str() + "/outcomes_0.csv"));

  // The source-attack row is flagged white-box.
  const std::string csv = slurp(ev1.str() + "/report.csv");
  std::istringstream lines(csv);
  std::string header, row;
  std::getline(lines, header);
  REQUIRE(std::getline(lines, row));
  CHECK(row.find("GSD,perturb-generator,perturb-generator#0,1,") == 0);

  // Aggregates recomputable from the per-example outcome rows.
  {
    std::istringstream oc(slurp(ev1.str() + "/outcomes_0.csv"));
    std::string line;
    std::getline(oc, line);  // header
    std::size_t a2 = 0, a12 = 0;
    while (std::getline(oc, line)) {
      std::istringstream cells(line);
      std::string cell;
      std::vector<std::string> f;
      while (std::getline(cells, cell, ',')) f.push_back(cell);
      REQUIRE(f.size() == 8);
      const bool raw_ok = f[3] == "1", adv_ok = f[4] == "1";
      if (raw_ok) ++a12;
      if (raw_ok && !adv_ok) ++a2;
    }
    std::istringstream cells(row);
    std::string cell;
    std::vector<std::string> rf;
    while (std::getline(cells, cell, ',')) rf.push_back(cell);
    const double asr_raw = std::stod(rf[6]);
    CHECK(asr_raw == doctest::Approx(double(a2) / double(a12)).epsilon(1e-6));
  }

  // Single-point ablation completes with a marker.
  ExperimentConfig ac = cc;
  ac.sweep_param = "T";
  ac.sweep_grid = {2};
  REQUIRE(cmd_ablate(ac, 42, abl.str()) == 0);
  CHECK(fs::exists(abl.str() + "/grid_complete"));
  const std::string series = slurp(abl.str() + "/ablation.csv");
  CHECK(series.find("param,value,accuracy,ir_whitebox,uiqi_mean") == 0);
}

TEST_CASE("craft with T=0 yields IEs equal to the raw images end to end") {
  TempDir cls("ik-t0-cls"), atk("ik-t0-atk"), crf("ik-t0-craft");
  ExperimentConfig tc;
  tc.dataset.kind = "synthetic";
  tc.dataset.per_class = 120;
  tc.dataset.n = 16;
  tc.dataset.classes = 2;
  tc.hidden = {16};
  tc.epochs = 20;
  REQUIRE(cmd_train_classifier(tc, 7, cls.str()) == 0);
  ExperimentConfig ta = tc;
  ta.classifier_path = cls.str() + "/classifier.weights";
  ta.attack_kind = "universal-perturbation";
  ta.attack_eps = 0.3;
  ta.epochs = 5;
  REQUIRE(cmd_train_attack(ta, 7, atk.str()) == 0);
  ExperimentConfig cc = tc;
  cc.classifier_path = ta.classifier_path;
  cc.source_attack_path = atk.str() + "/attack.atk";
  cc.immune.iterations = 0;
  cc.n_eval = 8;
  REQUIRE(cmd_craft(cc, 7, crf.str()) == 0);

  std::vector<Tensor> ies = load_tensor_archive(crf.str() + "/ies.tns");
  Dataset data = cc.dataset.load(7);
  Splits s = split(data, 0.7, 0.15, 0.15, 7);
  for (std::size_t i = 0; i < ies.size(); ++i)
    CHECK(ies[i] == s.test.examples[i].x);
}
