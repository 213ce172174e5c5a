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
// Experiment driver. Subcommands: train-classifier, train-attack, craft,
// evaluate, ablate. Exit code 0 only on full success.
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "immunekit/experiment.hpp"

namespace ik = immunekit;

int main(int argc, char** argv) {
  CLI::App app{"ImmuneKit: craft and evaluate immune examples"};
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
  };

  const std::vector<std::string> names = {"train-classifier", "train-attack",
                                          "craft", "evaluate", "ablate"};
  std::map<std::string, Args> args;
  for (const std::string& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    Args& a = args[name];
    sub->add_option("--config", a.config, "JSON config path")->required();
    sub->add_option("--seed", a.seed, "global run seed");
    sub->add_option("--out", a.out, "output directory")->required();
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  const Args& a = args[name];
  try {
    ik::ExperimentConfig cfg = ik::load_config(a.config, name);
    if (name == "train-classifier")
      return ik::cmd_train_classifier(cfg, a.seed, a.out);
    if (name == "train-attack") return ik::cmd_train_attack(cfg, a.seed, a.out);
    if (name == "craft") return ik::cmd_craft(cfg, a.seed, a.out);
    if (name == "evaluate") return ik::cmd_evaluate(cfg, a.seed, a.out);
    return ik::cmd_ablate(cfg, a.seed, a.out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
