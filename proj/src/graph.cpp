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
#include "immunekit/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace immunekit {
namespace {

const char* kind_name(OpKind k) {
  switch (k) {
    case OpKind::kInput: return "input";
    case OpKind::kParam: return "param";
    case OpKind::kAffine: return "affine";
    case OpKind::kRelu: return "relu";
    case OpKind::kTanh: return "tanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kScale: return "scale";
    case OpKind::kClipBall: return "clip_ball";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
    case OpKind::kHingeAttackLoss: return "hinge_attack_loss";
    case OpKind::kSumSquares: return "sum_squares";
  }
  return "?";
}

std::string node_desc(NodeId id, OpKind k) {
  return std::string(kind_name(k)) + "#" + std::to_string(id);
}

}  // namespace

NodeId Graph::push(Node n) {
  for (NodeId in : n.inputs)
    if (in >= nodes_.size())
      throw StructuralError("graph: input id " + std::to_string(in) +
                            " precedes nothing (topological order violated)");
  nodes_.push_back(std::move(n));
  forward_done_ = false;
  return nodes_.size() - 1;
}

NodeId Graph::input(std::vector<std::size_t> shape) {
  Node n;
  n.kind = OpKind::kInput;
  n.value = Tensor(std::move(shape));
  NodeId id = push(std::move(n));
  inputs_.push_back(id);
  return id;
}

NodeId Graph::param(Tensor t) {
  Node n;
  n.kind = OpKind::kParam;
  n.value = std::move(t);
  return push(std::move(n));
}

NodeId Graph::affine(NodeId x, NodeId w, NodeId b) {
  const Tensor& xv = nodes_.at(x).value;
  const Tensor& wv = nodes_.at(w).value;
  const Tensor& bv = nodes_.at(b).value;
  if (wv.shape.size() != 2 || xv.shape.size() != 1 || bv.shape.size() != 1 ||
      wv.shape[1] != xv.shape[0] || wv.shape[0] != bv.shape[0])
    throw StructuralError("affine: incompatible shapes W" + shape_str(wv.shape) +
                          " x" + shape_str(xv.shape) + " b" + shape_str(bv.shape));
  Node n;
  n.kind = OpKind::kAffine;
  n.inputs = {x, w, b};
  n.value = Tensor({wv.shape[0]});
  return push(std::move(n));
}

NodeId Graph::relu(NodeId x) {
  Node n;
  n.kind = OpKind::kRelu;
  n.inputs = {x};
  n.value = Tensor(nodes_.at(x).value.shape);
  return push(std::move(n));
}

NodeId Graph::tanh_(NodeId x) {
  Node n;
  n.kind = OpKind::kTanh;
  n.inputs = {x};
  n.value = Tensor(nodes_.at(x).value.shape);
  return push(std::move(n));
}

NodeId Graph::sigmoid(NodeId x) {
  Node n;
  n.kind = OpKind::kSigmoid;
  n.inputs = {x};
  n.value = Tensor(nodes_.at(x).value.shape);
  return push(std::move(n));
}

NodeId Graph::add(NodeId a, NodeId b) {
  require_same_shape(nodes_.at(a).value, nodes_.at(b).value, "add");
  Node n;
  n.kind = OpKind::kAdd;
  n.inputs = {a, b};
  n.value = Tensor(nodes_.at(a).value.shape);
  return push(std::move(n));
}

NodeId Graph::sub(NodeId a, NodeId b) {
  require_same_shape(nodes_.at(a).value, nodes_.at(b).value, "sub");
  Node n;
  n.kind = OpKind::kSub;
  n.inputs = {a, b};
  n.value = Tensor(nodes_.at(a).value.shape);
  return push(std::move(n));
}

NodeId Graph::scale(NodeId x, double c) {
  Node n;
  n.kind = OpKind::kScale;
  n.inputs = {x};
  n.c = c;
  n.value = Tensor(nodes_.at(x).value.shape);
  return push(std::move(n));
}

NodeId Graph::clip_ball(NodeId v, NodeId center, double eps, double lo, double hi) {
  require_same_shape(nodes_.at(v).value, nodes_.at(center).value, "clip_ball");
  if (eps < 0.0) throw UsageError("clip_ball: eps must be >= 0");
  if (lo > hi) throw UsageError("clip_ball: lo > hi");
  Node n;
  n.kind = OpKind::kClipBall;
  n.inputs = {v, center};
  n.c = eps;
  n.lo = lo;
  n.hi = hi;
  n.value = Tensor(nodes_.at(v).value.shape);
  return push(std::move(n));
}

NodeId Graph::softmax_cross_entropy(NodeId logits, int label) {
  const Tensor& z = nodes_.at(logits).value;
  if (z.shape.size() != 1 || z.shape[0] < 2)
    throw StructuralError("softmax_cross_entropy: logits must be a vector of >= 2");
  Node n;
  n.kind = OpKind::kSoftmaxCrossEntropy;
  n.inputs = {logits};
  n.label = label;
  n.value = Tensor({1});
  return push(std::move(n));
}

NodeId Graph::hinge_attack_loss(NodeId logits, int label, double margin) {
  const Tensor& z = nodes_.at(logits).value;
  if (z.shape.size() != 1 || z.shape[0] < 2)
    throw StructuralError("hinge_attack_loss: logits must be a vector of >= 2");
  Node n;
  n.kind = OpKind::kHingeAttackLoss;
  n.inputs = {logits};
  n.label = label;
  n.margin = margin;
  n.value = Tensor({1});
  return push(std::move(n));
}

NodeId Graph::sum_squares(NodeId x) {
  Node n;
  n.kind = OpKind::kSumSquares;
  n.inputs = {x};
  n.value = Tensor({1});
  return push(std::move(n));
}

Tensor& Graph::param_value(NodeId id) {
  Node& n = nodes_.at(id);
  if (n.kind != OpKind::kParam) throw UsageError("param_value: not a param node");
  forward_done_ = false;
  return n.value;
}

void Graph::set_loss(NodeId id) {
  if (id >= nodes_.size()) throw StructuralError("set_loss: unknown node");
  loss_ = id;
}

NodeId Graph::loss_node() const {
  if (loss_ == static_cast<NodeId>(-1)) throw StateError("graph: no loss node set");
  return loss_;
}

void Graph::set_label(NodeId id, int label) {
  Node& n = nodes_.at(id);
  if (n.kind != OpKind::kSoftmaxCrossEntropy && n.kind != OpKind::kHingeAttackLoss)
    throw UsageError("set_label: node is not a loss op");
  n.label = label;
  forward_done_ = false;
}

void Graph::set_input(NodeId id, const Tensor& t) {
  Node& n = nodes_.at(id);
  if (n.kind != OpKind::kInput) throw UsageError("set_input: not an input node");
  require_same_shape(n.value, t, "set_input " + node_desc(id, n.kind));
  n.value = t;
  forward_done_ = false;
}

const Tensor& Graph::forward(const std::map<NodeId, Tensor>& bindings) {
  for (NodeId in : inputs_) {
    auto it = bindings.find(in);
    if (it == bindings.end())
      throw UsageError("forward: missing binding for input node " + std::to_string(in));
    set_input(in, it->second);
  }
  return forward();
}

const Tensor& Graph::forward() {
  const NodeId loss = loss_node();
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    Node& n = nodes_[id];
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;
      case OpKind::kAffine: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& w = nodes_[n.inputs[1]].value;
        const Tensor& b = nodes_[n.inputs[2]].value;
        const std::size_t out = w.shape[0], in = w.shape[1];
        for (std::size_t r = 0; r < out; ++r) {
          const double* wr = &w.v[r * in];
          double acc = b.v[r];
          for (std::size_t c = 0; c < in; ++c) acc += wr[c] * x.v[c];
          n.value.v[r] = acc;
        }
        break;
      }
      case OpKind::kRelu: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (std::size_t k = 0; k < x.numel(); ++k)
          n.value.v[k] = x.v[k] > 0.0 ? x.v[k] : 0.0;
        break;
      }
      case OpKind::kTanh: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (std::size_t k = 0; k < x.numel(); ++k) n.value.v[k] = std::tanh(x.v[k]);
        break;
      }
      case OpKind::kSigmoid: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (std::size_t k = 0; k < x.numel(); ++k)
          n.value.v[k] = 1.0 / (1.0 + std::exp(-x.v[k]));
        break;
      }
      case OpKind::kAdd: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        for (std::size_t k = 0; k < a.numel(); ++k) n.value.v[k] = a.v[k] + b.v[k];
        break;
      }
      case OpKind::kSub: {
        const Tensor& a = nodes_[n.inputs[0]].value;
        const Tensor& b = nodes_[n.inputs[1]].value;
        for (std::size_t k = 0; k < a.numel(); ++k) n.value.v[k] = a.v[k] - b.v[k];
        break;
      }
      case OpKind::kScale: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        for (std::size_t k = 0; k < x.numel(); ++k) n.value.v[k] = n.c * x.v[k];
        break;
      }
      case OpKind::kClipBall: {
        const Tensor& v = nodes_[n.inputs[0]].value;
        const Tensor& c = nodes_[n.inputs[1]].value;
        for (std::size_t k = 0; k < v.numel(); ++k) {
          double m = std::max({v.v[k], c.v[k] - n.c, n.lo});
          n.value.v[k] = std::min({m, c.v[k] + n.c, n.hi});
        }
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        const Tensor& z = nodes_[n.inputs[0]].value;
        const std::size_t l = z.numel();
        if (n.label < 0 || static_cast<std::size_t>(n.label) >= l)
          throw UsageError("softmax_cross_entropy: label out of range at " +
                           node_desc(id, n.kind));
        double m = z.v[0];
        for (std::size_t k = 1; k < l; ++k) m = std::max(m, z.v[k]);
        double sum = 0.0;
        n.aux = Tensor({l});
        for (std::size_t k = 0; k < l; ++k) {
          n.aux.v[k] = std::exp(z.v[k] - m);
          sum += n.aux.v[k];
        }
        for (std::size_t k = 0; k < l; ++k) n.aux.v[k] /= sum;
        n.value.v[0] = std::log(sum) - (z.v[static_cast<std::size_t>(n.label)] - m);
        break;
      }
      case OpKind::kHingeAttackLoss: {
        const Tensor& z = nodes_[n.inputs[0]].value;
        const std::size_t l = z.numel();
        const std::size_t y = static_cast<std::size_t>(n.label);
        if (n.label < 0 || y >= l)
          throw UsageError("hinge_attack_loss: label out of range at " +
                           node_desc(id, n.kind));
        std::size_t best = y == 0 ? 1 : 0;
        for (std::size_t k = 0; k < l; ++k)
          if (k != y && z.v[k] > z.v[best]) best = k;
        const double raw = n.margin - (z.v[best] - z.v[y]);
        n.aux = Tensor({2});
        n.aux.v[0] = raw > 0.0 ? 1.0 : 0.0;
        n.aux.v[1] = static_cast<double>(best);
        n.value.v[0] = raw > 0.0 ? raw : 0.0;
        break;
      }
      case OpKind::kSumSquares: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        double acc = 0.0;
        for (std::size_t k = 0; k < x.numel(); ++k) acc += x.v[k] * x.v[k];
        n.value.v[0] = acc;
        break;
      }
    }
    if (!n.value.all_finite())
      throw NumericError("forward: non-finite output at " + node_desc(id, n.kind));
  }
  forward_done_ = true;
  return nodes_[loss].value;
}

std::map<NodeId, Tensor> Graph::backward(const std::set<NodeId>& at) {
  if (!forward_done_) throw StateError("backward: forward has not been run");
  const NodeId loss = loss_node();
  if (nodes_[loss].value.numel() != 1)
    throw StructuralError("backward: loss node output is not scalar");

  // Ancestors of the loss: nodes from which the loss is reachable.
  std::vector<char> reaches_loss(nodes_.size(), 0);
  reaches_loss[loss] = 1;
  for (NodeId id = loss + 1; id-- > 0;) {
    if (!reaches_loss[id]) continue;
    for (NodeId in : nodes_[id].inputs) reaches_loss[in] = 1;
  }
  for (NodeId r : at)
    if (r >= nodes_.size() || !reaches_loss[r])
      throw StructuralError("backward: node " + std::to_string(r) +
                            " is not reachable from the loss node");

  // Adjoints are only accumulated where they can influence a requested node:
  // the consumer-closure of the request set, plus the loss itself.
  std::vector<char> needed(nodes_.size(), 0);
  for (NodeId r : at) needed[r] = 1;
  needed[loss] = 1;
  for (NodeId id = 0; id < nodes_.size(); ++id) {
    if (needed[id]) continue;
    for (NodeId in : nodes_[id].inputs)
      if (needed[in]) {
        needed[id] = 1;
        break;
      }
  }

  for (NodeId id = 0; id < nodes_.size(); ++id)
    if (needed[id]) nodes_[id].grad = Tensor(nodes_[id].value.shape);
  nodes_[loss].grad.v[0] = 1.0;

  for (NodeId id = loss + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!needed[id] || !reaches_loss[id]) continue;
    const Tensor& g = n.grad;
    auto wants = [&](std::size_t slot) { return needed[n.inputs[slot]]; };
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;
      case OpKind::kAffine: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& w = nodes_[n.inputs[1]].value;
        const std::size_t out = w.shape[0], in = w.shape[1];
        if (wants(0)) {
          Tensor& dx = nodes_[n.inputs[0]].grad;
          for (std::size_t r = 0; r < out; ++r) {
            const double gr = g.v[r];
            const double* wr = &w.v[r * in];
            for (std::size_t c = 0; c < in; ++c) dx.v[c] += gr * wr[c];
          }
        }
        if (wants(1)) {
          Tensor& dw = nodes_[n.inputs[1]].grad;
          for (std::size_t r = 0; r < out; ++r) {
            const double gr = g.v[r];
            double* dwr = &dw.v[r * in];
            for (std::size_t c = 0; c < in; ++c) dwr[c] += gr * x.v[c];
          }
        }
        if (wants(2)) {
          Tensor& db = nodes_[n.inputs[2]].grad;
          for (std::size_t r = 0; r < out; ++r) db.v[r] += g.v[r];
        }
        break;
      }
      case OpKind::kRelu: {
        if (!wants(0)) break;
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor& dx = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < x.numel(); ++k)
          if (x.v[k] > 0.0) dx.v[k] += g.v[k];
        break;
      }
      case OpKind::kTanh: {
        if (!wants(0)) break;
        Tensor& dx = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < n.value.numel(); ++k)
          dx.v[k] += (1.0 - n.value.v[k] * n.value.v[k]) * g.v[k];
        break;
      }
      case OpKind::kSigmoid: {
        if (!wants(0)) break;
        Tensor& dx = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < n.value.numel(); ++k)
          dx.v[k] += n.value.v[k] * (1.0 - n.value.v[k]) * g.v[k];
        break;
      }
      case OpKind::kAdd: {
        for (std::size_t s = 0; s < 2; ++s) {
          if (!wants(s)) continue;
          Tensor& d = nodes_[n.inputs[s]].grad;
          for (std::size_t k = 0; k < g.numel(); ++k) d.v[k] += g.v[k];
        }
        break;
      }
      case OpKind::kSub: {
        if (wants(0)) {
          Tensor& d = nodes_[n.inputs[0]].grad;
          for (std::size_t k = 0; k < g.numel(); ++k) d.v[k] += g.v[k];
        }
        if (wants(1)) {
          Tensor& d = nodes_[n.inputs[1]].grad;
          for (std::size_t k = 0; k < g.numel(); ++k) d.v[k] -= g.v[k];
        }
        break;
      }
      case OpKind::kScale: {
        if (!wants(0)) break;
        Tensor& dx = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < g.numel(); ++k) dx.v[k] += n.c * g.v[k];
        break;
      }
      case OpKind::kClipBall: {
        const Tensor& v = nodes_[n.inputs[0]].value;
        const Tensor& c = nodes_[n.inputs[1]].value;
        for (std::size_t k = 0; k < v.numel(); ++k) {
          // Branch attribution mirrors the forward min/max exactly; when the
          // raw value wins the clamp the gradient flows through v, when a
          // ball face wins it flows through the center.
          if (n.value.v[k] == v.v[k]) {
            if (wants(0)) nodes_[n.inputs[0]].grad.v[k] += g.v[k];
          } else if (n.value.v[k] == c.v[k] - n.c || n.value.v[k] == c.v[k] + n.c) {
            if (wants(1)) nodes_[n.inputs[1]].grad.v[k] += g.v[k];
          }
          // Clipped to [lo, hi]: zero subgradient.
        }
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        if (!wants(0)) break;
        Tensor& dz = nodes_[n.inputs[0]].grad;
        const std::size_t y = static_cast<std::size_t>(n.label);
        for (std::size_t k = 0; k < n.aux.numel(); ++k)
          dz.v[k] += (n.aux.v[k] - (k == y ? 1.0 : 0.0)) * g.v[0];
        break;
      }
      case OpKind::kHingeAttackLoss: {
        if (!wants(0)) break;
        if (n.aux.v[0] > 0.0) {
          Tensor& dz = nodes_[n.inputs[0]].grad;
          dz.v[static_cast<std::size_t>(n.label)] += g.v[0];
          dz.v[static_cast<std::size_t>(n.aux.v[1])] -= g.v[0];
        }
        break;
      }
      case OpKind::kSumSquares: {
        if (!wants(0)) break;
        const Tensor& x = nodes_[n.inputs[0]].value;
        Tensor& dx = nodes_[n.inputs[0]].grad;
        for (std::size_t k = 0; k < x.numel(); ++k) dx.v[k] += 2.0 * x.v[k] * g.v[0];
        break;
      }
    }
  }

  std::map<NodeId, Tensor> result;
  for (NodeId r : at) result.emplace(r, nodes_[r].grad);
  return result;
}

Tensor Graph::forward_tangent(NodeId wrt, const Tensor& tangent, NodeId at) {
  if (!forward_done_) throw StateError("forward_tangent: forward has not been run");
  if (wrt >= nodes_.size() || at >= nodes_.size())
    throw StructuralError("forward_tangent: unknown node");
  require_same_shape(nodes_[wrt].value, tangent, "forward_tangent seed");
  std::vector<Tensor> dot(at + 1);
  for (NodeId id = 0; id <= at; ++id) dot[id] = Tensor(nodes_[id].value.shape);
  dot[wrt] = tangent;
  for (NodeId id = 0; id <= at; ++id) {
    if (id == wrt) continue;
    Node& n = nodes_[id];
    switch (n.kind) {
      case OpKind::kInput:
      case OpKind::kParam:
        break;
      case OpKind::kAffine: {
        const Tensor& w = nodes_[n.inputs[1]].value;
        const Tensor& dx = dot[n.inputs[0]];
        const std::size_t out = w.shape[0], in = w.shape[1];
        for (std::size_t r = 0; r < out; ++r) {
          const double* wr = &w.v[r * in];
          double acc = 0.0;
          for (std::size_t c = 0; c < in; ++c) acc += wr[c] * dx.v[c];
          dot[id].v[r] = acc;
        }
        break;
      }
      case OpKind::kRelu: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& dx = dot[n.inputs[0]];
        for (std::size_t k = 0; k < x.numel(); ++k)
          dot[id].v[k] = x.v[k] > 0.0 ? dx.v[k] : 0.0;
        break;
      }
      case OpKind::kTanh: {
        const Tensor& dx = dot[n.inputs[0]];
        for (std::size_t k = 0; k < n.value.numel(); ++k)
          dot[id].v[k] = (1.0 - n.value.v[k] * n.value.v[k]) * dx.v[k];
        break;
      }
      case OpKind::kSigmoid: {
        const Tensor& dx = dot[n.inputs[0]];
        for (std::size_t k = 0; k < n.value.numel(); ++k)
          dot[id].v[k] = n.value.v[k] * (1.0 - n.value.v[k]) * dx.v[k];
        break;
      }
      case OpKind::kAdd: {
        const Tensor& a = dot[n.inputs[0]];
        const Tensor& b = dot[n.inputs[1]];
        for (std::size_t k = 0; k < a.numel(); ++k) dot[id].v[k] = a.v[k] + b.v[k];
        break;
      }
      case OpKind::kSub: {
        const Tensor& a = dot[n.inputs[0]];
        const Tensor& b = dot[n.inputs[1]];
        for (std::size_t k = 0; k < a.numel(); ++k) dot[id].v[k] = a.v[k] - b.v[k];
        break;
      }
      case OpKind::kScale: {
        const Tensor& dx = dot[n.inputs[0]];
        for (std::size_t k = 0; k < dx.numel(); ++k) dot[id].v[k] = n.c * dx.v[k];
        break;
      }
      case OpKind::kClipBall: {
        const Tensor& v = nodes_[n.inputs[0]].value;
        const Tensor& c = nodes_[n.inputs[1]].value;
        const Tensor& dv = dot[n.inputs[0]];
        const Tensor& dc = dot[n.inputs[1]];
        for (std::size_t k = 0; k < v.numel(); ++k) {
          if (n.value.v[k] == v.v[k])
            dot[id].v[k] = dv.v[k];
          else if (n.value.v[k] == c.v[k] - n.c || n.value.v[k] == c.v[k] + n.c)
            dot[id].v[k] = dc.v[k];
          else
            dot[id].v[k] = 0.0;
        }
        break;
      }
      case OpKind::kSoftmaxCrossEntropy: {
        const Tensor& dz = dot[n.inputs[0]];
        const std::size_t y = static_cast<std::size_t>(n.label);
        double acc = 0.0;
        for (std::size_t k = 0; k < n.aux.numel(); ++k)
          acc += (n.aux.v[k] - (k == y ? 1.0 : 0.0)) * dz.v[k];
        dot[id].v[0] = acc;
        break;
      }
      case OpKind::kHingeAttackLoss: {
        const Tensor& dz = dot[n.inputs[0]];
        dot[id].v[0] = n.aux.v[0] > 0.0
                           ? dz.v[static_cast<std::size_t>(n.label)] -
                                 dz.v[static_cast<std::size_t>(n.aux.v[1])]
                           : 0.0;
        break;
      }
      case OpKind::kSumSquares: {
        const Tensor& x = nodes_[n.inputs[0]].value;
        const Tensor& dx = dot[n.inputs[0]];
        double acc = 0.0;
        for (std::size_t k = 0; k < x.numel(); ++k) acc += 2.0 * x.v[k] * dx.v[k];
        dot[id].v[0] = acc;
        break;
      }
    }
  }
  return dot[at];
}

const Tensor& Graph::value(NodeId id) const { return nodes_.at(id).value; }

}  // namespace immunekit
