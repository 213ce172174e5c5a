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
#ifndef IMMUNEKIT_ATTACK_HPP_
#define IMMUNEKIT_ATTACK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "immunekit/data.hpp"
#include "immunekit/graph.hpp"
#include "immunekit/model.hpp"

namespace immunekit {

enum class AttackKind {
  kPerturbGenerator,      // residual MLP, x + eps * tanh(h(x))
  kTargetedAutoencoder,   // sigmoid autoencoder projected to the eps-ball
  kUniversalPerturbation, // one shared delta
  kIterativeSign,         // evaluation-only iterative sign steps on a model
};

const char* attack_kind_name(AttackKind k);
AttackKind attack_kind_from_name(const std::string& name);
bool attack_differentiable(AttackKind k);

// A trained attack g: x -> adversarial example, always inside [0,1]^n and
// within the eps-ball of x. Differentiable kinds are composed of graph layers
// only; the iterative-sign kind carries a classifier snapshot and cannot be
// differentiated through.
struct AttackModel {
  AttackKind kind = AttackKind::kUniversalPerturbation;
  double eps = 0.3;
  int target = -1;  // targeted kinds only
  std::uint64_t seed = 0;
  std::vector<Tensor> params;  // kind-specific layout
  ModelParams surrogate;       // iterative-sign only
  int steps = 10;
  double step_size = 0.05;

  std::size_t input_dim() const;
};

// Content digest; equal digests mean the same attack (used for the white-box
// row flag in reports).
std::string attack_hash(const AttackModel& g);

// Appends g's forward map to a graph and returns the adversarial-example
// node, so backward can reach both x and g(x). Throws CapabilityError for the
// iterative-sign kind.
NodeId append_attack(Graph& g, const AttackModel& atk, NodeId x,
                     std::vector<NodeId>* param_nodes = nullptr);

Tensor apply_attack(const AttackModel& atk, const Tensor& x);

// x_{k+1} = clip_to_ball(x_k + step * sign(grad J(f(x_k), y)), x, eps, [0,1]).
Tensor iterative_sign_attack(const ModelParams& f, const Tensor& x, int y,
                             double eps, int steps, double step_size);

AttackModel make_iterative_sign(const ModelParams& f, double eps, int steps,
                                double step_size);

struct AttackTrainConfig {
  std::size_t epochs = 20;
  double lr = 1e-2;
  std::size_t batch = 16;
  double margin = 5.0;
  double dist_weight = 0.1;  // weight of the perturbation-size term
  double asr_floor = 0.8;    // <= 0 disables the floor check
};

// Non-targeted residual generator trained against a hinge adversarial loss.
AttackModel train_perturb_generator(const ModelParams& f, const Dataset& train,
                                    const Dataset& holdout, double eps,
                                    std::uint64_t seed,
                                    const AttackTrainConfig& cfg = {});

// Targeted autoencoder; success means f(g(x)) == target. Examples whose label
// equals the target are excluded from the targeted ASR.
AttackModel train_targeted_autoencoder(const ModelParams& f, const Dataset& train,
                                       const Dataset& holdout, int target,
                                       double eps, std::uint64_t seed,
                                       const AttackTrainConfig& cfg = {});

// Single shared delta, projected sign ascent on the mean loss.
AttackModel train_universal_perturbation(const ModelParams& f, const Dataset& train,
                                         const Dataset& holdout, double eps,
                                         std::uint64_t seed,
                                         const AttackTrainConfig& cfg = {});

// Measured ASR of g against f over `data`: misclassified raw images are
// ignored; targeted attacks exclude examples whose label is the target.
// Throws UndefinedMetricError when the denominator is empty.
double attack_asr(const ModelParams& f, const AttackModel& g, const Dataset& data);

// Attack persistence, header `IMMUNEKIT-ATTACK v1 <kind> <hash>`.
void save_attack(const AttackModel& g, const std::string& path);
AttackModel load_attack(const std::string& path);

}  // namespace immunekit

#endif  // IMMUNEKIT_ATTACK_HPP_
