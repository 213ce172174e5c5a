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
#ifndef IMMUNEKIT_GRAPH_HPP_
#define IMMUNEKIT_GRAPH_HPP_

#include <cstddef>
#include <map>
#include <set>
#include <vector>

#include "immunekit/tensor.hpp"

namespace immunekit {

using NodeId = std::size_t;

enum class OpKind {
  kInput,
  kParam,
  kAffine,    // inputs: x, W [out,in], b [out]
  kRelu,
  kTanh,
  kSigmoid,
  kAdd,
  kSub,
  kScale,     // c * x
  kClipBall,  // inputs: v, center; clamp v into [center-eps, center+eps] n [lo,hi]
  kSoftmaxCrossEntropy,  // scalar loss against an integer label
  kHingeAttackLoss,      // max(margin - (max_{j!=y} z_j - z_y), 0)
  kSumSquares,           // scalar sum of squares
};

struct Node {
  OpKind kind;
  std::vector<NodeId> inputs;
  Tensor value;
  Tensor grad;
  Tensor aux;        // softmax probabilities, cached for backward
  double c = 0.0;    // Scale factor / ClipBall eps
  double lo = 0.0;   // ClipBall range
  double hi = 1.0;
  double margin = 0.0;
  int label = -1;
};

// Tape-style computation graph over a fixed layer vocabulary. Nodes are
// appended in topological order; forward caches every activation so backward
// can return the gradient at any node reachable from the loss, including
// intermediate ones. Single-writer during forward/backward.
class Graph {
 public:
  NodeId input(std::vector<std::size_t> shape);
  NodeId param(Tensor t);
  NodeId affine(NodeId x, NodeId w, NodeId b);
  NodeId relu(NodeId x);
  NodeId tanh_(NodeId x);
  NodeId sigmoid(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, double c);
  NodeId clip_ball(NodeId v, NodeId center, double eps, double lo, double hi);
  NodeId softmax_cross_entropy(NodeId logits, int label);
  NodeId hinge_attack_loss(NodeId logits, int label, double margin);
  NodeId sum_squares(NodeId x);

  std::size_t size() const { return nodes_.size(); }
  const Node& node(NodeId id) const { return nodes_.at(id); }
  Tensor& param_value(NodeId id);

  void set_loss(NodeId id);
  NodeId loss_node() const;
  void set_label(NodeId ce_or_hinge, int label);
  void set_input(NodeId id, const Tensor& t);

  // Runs the whole tape. `bindings` must cover every input node; shapes are
  // checked against declarations. Returns the loss-node output.
  const Tensor& forward(const std::map<NodeId, Tensor>& bindings);
  // Re-runs the tape with whatever set_input() left in place.
  const Tensor& forward();

  // d(loss)/d(node output) for each requested node. Requires a completed
  // forward on the current values; requested nodes must be reachable from the
  // loss node.
  std::map<NodeId, Tensor> backward(const std::set<NodeId>& at);

  // Forward-mode directional derivative: propagates `tangent` seeded at
  // `wrt` through the cached tape and returns the tangent at `at`
  // (the Jacobian-vector product of the subgraph wrt -> at).
  Tensor forward_tangent(NodeId wrt, const Tensor& tangent, NodeId at);

  const Tensor& value(NodeId id) const;

 private:
  NodeId push(Node n);
  void check_axis(NodeId id) const;

  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
  NodeId loss_ = static_cast<NodeId>(-1);
  bool forward_done_ = false;
};

}  // namespace immunekit

#endif  // IMMUNEKIT_GRAPH_HPP_
