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
#ifndef IMMUNEKIT_EXPERIMENT_HPP_
#define IMMUNEKIT_EXPERIMENT_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "immunekit/attack.hpp"
#include "immunekit/data.hpp"
#include "immunekit/immune.hpp"
#include "immunekit/metrics.hpp"
#include "immunekit/model.hpp"

namespace immunekit {

// Dataset description shared by every command config.
struct DatasetSpec {
  std::string kind;  // "synthetic" | "mnist-idx"
  // synthetic
  std::size_t per_class = 80;
  std::size_t n = 64;
  int classes = 4;
  double spread = 0.06;
  // mnist-idx
  std::string images;
  std::string labels;

  Dataset load(std::uint64_t seed) const;
};

struct ExperimentConfig {
  DatasetSpec dataset;

  // train-classifier
  std::vector<std::size_t> hidden = {32};
  std::string activation = "relu";
  std::size_t epochs = 40;
  double lr = 1e-3;
  std::size_t batch = 64;
  double accuracy_floor = 0.0;

  // train-attack
  std::string attack_kind;
  double attack_eps = 0.3;
  int attack_target = -1;
  int attack_steps = 10;
  double attack_step_size = 0.05;
  double asr_floor = 0.0;
  std::string classifier_path;

  // craft / evaluate / ablate
  std::string source_attack_path;
  std::vector<std::string> target_attack_paths;
  std::string ie_archive_path;
  ImmuneConfig immune;
  std::size_t n_eval = 256;

  // ablate
  std::string sweep_param;  // "T" | "tau" | "alpha"
  std::vector<double> sweep_grid;
};

// Parses the versioned JSON schema (key "schema" must be 1); unknown keys are
// configuration errors.
ExperimentConfig parse_config(const nlohmann::json& j, const std::string& command);
ExperimentConfig load_config(const std::string& path, const std::string& command);

// IE archive: the weight-file container reused for a tensor list.
void save_tensor_archive(const std::vector<Tensor>& tensors,
                         const std::string& path);
std::vector<Tensor> load_tensor_archive(const std::string& path);

// Holds <out>/.lock for the duration of a command; a second concurrent run in
// the same directory fails instead of interleaving writes.
class OutputLock {
 public:
  explicit OutputLock(const std::string& out_dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

 private:
  std::string path_;
};

// One row of the transfer-report CSV (fixed column order).
struct ReportRow {
  std::string method;
  std::string source_attack;
  std::string target_attack;
  bool is_whitebox = false;
  std::size_t n_eval = 0;
  double accuracy = 0.0;
  double asr_raw = 0.0;
  double asr_ie = 0.0;
  double vasr = 0.0;
  double ir = 0.0;
  double uiqi_mean = 0.0;
  double linf_max = 0.0;
  std::uint64_t seed = 0;
};

std::string report_csv_header();
std::string report_csv_row(const ReportRow& r);

// Commands: each returns 0 on full success. `seed` overrides nothing in the
// config; it is the global run seed every substream derives from.
int cmd_train_classifier(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir);
int cmd_train_attack(const ExperimentConfig& cfg, std::uint64_t seed,
                     const std::string& out_dir);
int cmd_craft(const ExperimentConfig& cfg, std::uint64_t seed,
              const std::string& out_dir);
int cmd_evaluate(const ExperimentConfig& cfg, std::uint64_t seed,
                 const std::string& out_dir);
int cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& out_dir);

}  // namespace immunekit

#endif  // IMMUNEKIT_EXPERIMENT_HPP_
