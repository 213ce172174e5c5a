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
#ifndef IMMUNEKIT_MODEL_HPP_
#define IMMUNEKIT_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "immunekit/data.hpp"
#include "immunekit/graph.hpp"
#include "immunekit/tensor.hpp"

namespace immunekit {

enum class Activation { kRelu, kTanh, kSigmoid };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// MLP classifier layout: widths[0] inputs, widths.back() classes, hidden
// layers activated per `activation`, linear logits at the top.
struct ClassifierSpec {
  std::vector<std::size_t> widths;
  Activation activation = Activation::kRelu;
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return widths.front(); }
  std::size_t class_count() const { return widths.back(); }
  void validate() const;
};

// Hex FNV-1a digest of the canonical spec description. Persisted in weight
// files and checked on load.
std::string spec_hash(const ClassifierSpec& spec);

struct ModelParams {
  ClassifierSpec spec;
  // W0, b0, W1, b1, ... in layer order.
  std::vector<Tensor> weights;
  std::size_t epochs_trained = 0;

  bool operator==(const ModelParams& o) const {
    return spec.widths == o.spec.widths && spec.activation == o.spec.activation &&
           spec.seed == o.spec.seed && weights == o.weights &&
           epochs_trained == o.epochs_trained;
  }
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  static AdamState like(const std::vector<Tensor>& params, double lr = 1e-3);
};

// One bias-corrected Adam update, in place. Shapes must match.
void adam_step(AdamState& state, std::vector<Tensor>& params,
               const std::vector<Tensor>& grads);

// params <- params - lr * grads, in place.
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
              double lr);

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double lr = 1e-3;
  std::size_t batch = 64;
};

struct TrainingReport {
  std::vector<double> epoch_loss;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

ModelParams init_classifier(const ClassifierSpec& spec);

// Deterministic mini-batch training. Shuffling, init and batching all draw
// from substreams of spec.seed; the same seed reproduces the parameters bit
// for bit.
ModelParams train_classifier(const Dataset& train, const Dataset& holdout,
                             const ClassifierSpec& spec,
                             const OptimizerConfig& opt, std::size_t epochs,
                             TrainingReport* report = nullptr);

struct Prediction {
  int class_id;
  Tensor logits;
};

// Argmax of the logits; ties break toward the lowest class index.
Prediction predict(const ModelParams& params, const Tensor& x);

double accuracy(const ModelParams& params, const Dataset& data);

// Appends the classifier to an existing graph: returns the logits node fed by
// `x`. Parameters become graph constants (copies).
NodeId append_classifier(Graph& g, const ModelParams& params, NodeId x,
                         std::vector<NodeId>* param_nodes = nullptr);

// Weight persistence: one header line `IMMUNEKIT-WEIGHTS v1 <spec-hash>`
// followed by a JSON body with 17-significant-digit decimal values.
// Round trips are bit-exact.
void save_weights(const ModelParams& params, const std::string& path);
ModelParams load_weights(const std::string& path,
                         const std::string& expected_hash = "");

}  // namespace immunekit

#endif  // IMMUNEKIT_MODEL_HPP_
