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
#include "immunekit/attack.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "immunekit/rng.hpp"
#include "immunekit/serialize.hpp"

namespace immunekit {
namespace {

std::size_t generator_hidden(std::size_t n) {
  return n >= 784 ? 256 : std::max<std::size_t>(16, n);
}

std::size_t autoencoder_hidden(std::size_t n) {
  return n >= 784 ? 128 : std::max<std::size_t>(16, n / 2);
}

Tensor random_matrix(Rng rng, std::size_t out, std::size_t in) {
  const double s = std::sqrt(6.0 / double(in + out));
  Tensor w({out, in});
  for (double& x : w.v) x = rng.uniform(-s, s);
  return w;
}

void check_budget(const AttackModel& atk) {
  if (!(atk.eps > 0.0 && atk.eps < 1.0))
    throw UsageError("attack: budget eps must be in (0,1), got " +
                     std::to_string(atk.eps));
}

}  // namespace

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::kPerturbGenerator: return "perturb-generator";
    case AttackKind::kTargetedAutoencoder: return "targeted-autoencoder";
    case AttackKind::kUniversalPerturbation: return "universal-perturbation";
    case AttackKind::kIterativeSign: return "iterative-sign";
  }
  return "?";
}

AttackKind attack_kind_from_name(const std::string& name) {
  if (name == "perturb-generator") return AttackKind::kPerturbGenerator;
  if (name == "targeted-autoencoder") return AttackKind::kTargetedAutoencoder;
  if (name == "universal-perturbation") return AttackKind::kUniversalPerturbation;
  if (name == "iterative-sign") return AttackKind::kIterativeSign;
  throw ConfigError("unknown attack kind: " + name);
}

bool attack_differentiable(AttackKind k) {
  return k != AttackKind::kIterativeSign;
}

std::size_t AttackModel::input_dim() const {
  switch (kind) {
    case AttackKind::kPerturbGenerator:
    case AttackKind::kTargetedAutoencoder:
      return params.at(0).shape.at(1);
    case AttackKind::kUniversalPerturbation:
      return params.at(0).shape.at(0);
    case AttackKind::kIterativeSign:
      return surrogate.spec.input_dim();
  }
  return 0;
}

std::string attack_hash(const AttackModel& g) {
  std::ostringstream os;
  os << attack_kind_name(g.kind) << ";eps=" << render_double(g.eps)
     << ";target=" << g.target << ";seed=" << g.seed << ";steps=" << g.steps
     << ";step=" << render_double(g.step_size) << ";";
  for (const Tensor& t : g.params) {
    os << shape_str(t.shape) << ":";
    for (double v : t.v) os << render_double(v) << ",";
  }
  if (g.kind == AttackKind::kIterativeSign) os << "f=" << spec_hash(g.surrogate.spec);
  return fnv1a_hex(os.str());
}

NodeId append_attack(Graph& g, const AttackModel& atk, NodeId x,
                     std::vector<NodeId>* param_nodes) {
  if (!attack_differentiable(atk.kind))
    throw CapabilityError(std::string(attack_kind_name(atk.kind)) +
                          " is evaluation-only and cannot be differentiated");
  auto keep = [&](NodeId id) {
    if (param_nodes) param_nodes->push_back(id);
    return id;
  };
  switch (atk.kind) {
    case AttackKind::kPerturbGenerator: {
      NodeId w1 = keep(g.param(atk.params[0]));
      NodeId b1 = keep(g.param(atk.params[1]));
      NodeId w2 = keep(g.param(atk.params[2]));
      NodeId b2 = keep(g.param(atk.params[3]));
      // tanh hidden: relu units go dead on one class and the residual head
      // collapses to a constant shift.
      NodeId h = g.tanh_(g.affine(x, w1, b1));
      NodeId d = g.scale(g.tanh_(g.affine(h, w2, b2)), atk.eps);
      return g.clip_ball(g.add(x, d), x, atk.eps, 0.0, 1.0);
    }
    case AttackKind::kTargetedAutoencoder: {
      NodeId w1 = keep(g.param(atk.params[0]));
      NodeId b1 = keep(g.param(atk.params[1]));
      NodeId w2 = keep(g.param(atk.params[2]));
      NodeId b2 = keep(g.param(atk.params[3]));
      NodeId h = g.relu(g.affine(x, w1, b1));
      NodeId out = g.sigmoid(g.affine(h, w2, b2));
      return g.clip_ball(out, x, atk.eps, 0.0, 1.0);
    }
    case AttackKind::kUniversalPerturbation: {
      NodeId delta = keep(g.param(atk.params[0]));
      return g.clip_ball(g.add(x, delta), x, atk.eps, 0.0, 1.0);
    }
    case AttackKind::kIterativeSign:
      break;
  }
  throw CapabilityError("unreachable attack kind");
}

Tensor apply_attack(const AttackModel& atk, const Tensor& x) {
  check_budget(atk);
  if (atk.kind == AttackKind::kIterativeSign) {
    const int y = predict(atk.surrogate, x).class_id;
    return iterative_sign_attack(atk.surrogate, x, y, atk.eps, atk.steps,
                                 atk.step_size);
  }
  Graph g;
  NodeId in = g.input(x.shape);
  NodeId out = append_attack(g, atk, in);
  g.set_loss(out);
  g.set_input(in, x);
  return g.forward();
}

Tensor iterative_sign_attack(const ModelParams& f, const Tensor& x, int y,
                             double eps, int steps, double step_size) {
  Graph g;
  NodeId in = g.input(x.shape);
  NodeId logits = append_classifier(g, f, in);
  NodeId loss = g.softmax_cross_entropy(logits, y);
  g.set_loss(loss);

  Tensor cur = x;
  for (int k = 0; k < steps; ++k) {
    g.set_input(in, cur);
    g.forward();
    Tensor grad = g.backward({in}).at(in);
    Tensor stepped = cur;
    for (std::size_t i = 0; i < stepped.numel(); ++i) {
      const double s = grad.v[i] > 0.0 ? 1.0 : (grad.v[i] < 0.0 ? -1.0 : 0.0);
      stepped.v[i] += step_size * s;
    }
    cur = clip_to_ball(stepped, x, eps, 0.0, 1.0);
  }
  return cur;
}

AttackModel make_iterative_sign(const ModelParams& f, double eps, int steps,
                                double step_size) {
  AttackModel atk;
  atk.kind = AttackKind::kIterativeSign;
  atk.eps = eps;
  atk.steps = steps;
  atk.step_size = step_size;
  atk.surrogate = f;
  check_budget(atk);
  return atk;
}

double attack_asr(const ModelParams& f, const AttackModel& g, const Dataset& data) {
  std::size_t denom = 0, hits = 0;
  const bool targeted = g.kind == AttackKind::kTargetedAutoencoder;
  for (const Example& ex : data.examples) {
    if (targeted && ex.label == g.target) continue;
    if (predict(f, ex.x).class_id != ex.label) continue;  // raw misses ignored
    ++denom;
    const int verdict = predict(f, apply_attack(g, ex.x)).class_id;
    if (targeted ? verdict == g.target : verdict != ex.label) ++hits;
  }
  if (denom == 0)
    throw UndefinedMetricError("attack_asr: no correctly classified examples "
                               "remain in the denominator");
  return double(hits) / double(denom);
}

namespace {

// Shared trainer for the two MLP-backed attacks; the builder wires the
// per-kind loss on top of the attack subgraph.
struct AttackTrainGraph {
  Graph g;
  NodeId x;
  NodeId loss;
  std::vector<NodeId> pnodes;
};

void train_attack_params(AttackModel& atk, const ModelParams& f,
                         const Dataset& train, const AttackTrainConfig& cfg,
                         bool targeted) {
  const std::size_t n = atk.input_dim();
  AttackTrainGraph t;
  t.x = t.g.input({n});
  NodeId gx = append_attack(t.g, atk, t.x, &t.pnodes);
  NodeId logits = append_classifier(t.g, f, gx);
  NodeId adv_loss = targeted ? t.g.softmax_cross_entropy(logits, atk.target)
                             : t.g.hinge_attack_loss(logits, 0, cfg.margin);
  NodeId dist = t.g.scale(t.g.sum_squares(t.g.sub(gx, t.x)),
                          cfg.dist_weight / double(n));
  t.loss = t.g.add(adv_loss, dist);
  t.g.set_loss(t.loss);

  std::set<NodeId> want(t.pnodes.begin(), t.pnodes.end());
  AdamState adam = AdamState::like(atk.params, cfg.lr);
  Rng base(atk.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuf = base.stream("attack/shuffle", epoch);
    shuf.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(start + cfg.batch, order.size());
      std::vector<Tensor> grads;
      for (const Tensor& p : atk.params) grads.push_back(Tensor(p.shape));
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = train.examples[order[i]];
        t.g.set_input(t.x, ex.x);
        if (!targeted) t.g.set_label(adv_loss, ex.label);
        t.g.forward();
        auto bg = t.g.backward(want);
        for (std::size_t j = 0; j < t.pnodes.size(); ++j)
          for (std::size_t k = 0; k < grads[j].numel(); ++k)
            grads[j].v[k] += bg.at(t.pnodes[j]).v[k] / double(end - start);
      }
      adam_step(adam, atk.params, grads);
      for (std::size_t j = 0; j < t.pnodes.size(); ++j)
        t.g.param_value(t.pnodes[j]) = atk.params[j];
    }
  }
}

void enforce_floor(const AttackModel& atk, const ModelParams& f,
                   const Dataset& holdout, double floor) {
  if (floor <= 0.0 || holdout.size() == 0) return;
  const double asr = attack_asr(f, atk, holdout);
  if (asr < floor)
    throw TrainingError(std::string(attack_kind_name(atk.kind)) +
                        ": held-out ASR " + std::to_string(asr) +
                        " below floor " + std::to_string(floor));
}

}  // namespace

AttackModel train_perturb_generator(const ModelParams& f, const Dataset& train,
                                    const Dataset& holdout, double eps,
                                    std::uint64_t seed,
                                    const AttackTrainConfig& cfg) {
  if (train.size() == 0) throw UsageError("train_perturb_generator: empty dataset");
  const std::size_t n = f.spec.input_dim();
  const std::size_t h = generator_hidden(n);
  AttackModel atk;
  atk.kind = AttackKind::kPerturbGenerator;
  atk.eps = eps;
  atk.seed = seed;
  check_budget(atk);
  Rng base(seed);
  atk.params = {random_matrix(base.stream("gen/W1"), h, n), Tensor({h}),
                random_matrix(base.stream("gen/W2"), n, h), Tensor({n})};
  train_attack_params(atk, f, train, cfg, /*targeted=*/false);
  enforce_floor(atk, f, holdout, cfg.asr_floor);
  return atk;
}

AttackModel train_targeted_autoencoder(const ModelParams& f, const Dataset& train,
                                       const Dataset& holdout, int target,
                                       double eps, std::uint64_t seed,
                                       const AttackTrainConfig& cfg) {
  if (train.size() == 0) throw UsageError("train_targeted_autoencoder: empty dataset");
  if (target < 0 || target >= static_cast<int>(f.spec.class_count()))
    throw UsageError("train_targeted_autoencoder: target label out of range");
  bool any_non_target = false;
  for (const Example& ex : train.examples)
    if (ex.label != target) any_non_target = true;
  if (!any_non_target)
    throw UndefinedMetricError(
        "train_targeted_autoencoder: every example carries the target label, "
        "targeted ASR denominator is empty");

  const std::size_t n = f.spec.input_dim();
  const std::size_t h = autoencoder_hidden(n);
  AttackModel atk;
  atk.kind = AttackKind::kTargetedAutoencoder;
  atk.eps = eps;
  atk.target = target;
  atk.seed = seed;
  check_budget(atk);
  Rng base(seed);
  atk.params = {random_matrix(base.stream("ae/W1"), h, n), Tensor({h}),
                random_matrix(base.stream("ae/W2"), n, h), Tensor({n})};
  train_attack_params(atk, f, train, cfg, /*targeted=*/true);
  enforce_floor(atk, f, holdout, cfg.asr_floor);
  return atk;
}

AttackModel train_universal_perturbation(const ModelParams& f, const Dataset& train,
                                         const Dataset& holdout, double eps,
                                         std::uint64_t seed,
                                         const AttackTrainConfig& cfg) {
  if (train.size() == 0)
    throw UsageError("train_universal_perturbation: empty dataset");
  const std::size_t n = f.spec.input_dim();
  AttackModel atk;
  atk.kind = AttackKind::kUniversalPerturbation;
  atk.eps = eps;
  atk.seed = seed;
  check_budget(atk);
  atk.params = {Tensor({n})};

  Graph g;
  NodeId x = g.input({n});
  std::vector<NodeId> pnodes;
  NodeId gx = append_attack(g, atk, x, &pnodes);
  NodeId logits = append_classifier(g, f, gx);
  NodeId loss = g.softmax_cross_entropy(logits, 0);
  g.set_loss(loss);
  const NodeId delta_node = pnodes.at(0);

  const double step = eps / 8.0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Tensor grad({n});
    for (const Example& ex : train.examples) {
      g.set_input(x, ex.x);
      g.set_label(loss, ex.label);
      g.forward();
      const Tensor dg = g.backward({delta_node}).at(delta_node);
      for (std::size_t k = 0; k < n; ++k) grad.v[k] += dg.v[k];
    }
    Tensor& delta = atk.params[0];
    for (std::size_t k = 0; k < n; ++k) {
      const double s = grad.v[k] > 0.0 ? 1.0 : (grad.v[k] < 0.0 ? -1.0 : 0.0);
      // Ascent on the mean loss, projected back into the eps-ball.
      delta.v[k] = std::clamp(delta.v[k] + step * s, -eps, eps);
    }
    g.param_value(delta_node) = delta;
  }
  // A single shared direction cannot flip every class at once, so the
  // achievable ceiling on a balanced holdout is 1/classes of the way short of
  // the usual floor; cap it well below 0.5.
  enforce_floor(atk, f, holdout, cfg.asr_floor > 0.4 ? 0.4 : cfg.asr_floor);
  return atk;
}

void save_attack(const AttackModel& g, const std::string& path) {
  std::ostringstream body;
  body << "{\"kind\":\"" << attack_kind_name(g.kind) << "\",\"eps\":"
       << render_double(g.eps) << ",\"target\":" << g.target
       << ",\"seed\":" << g.seed << ",\"steps\":" << g.steps
       << ",\"step_size\":" << render_double(g.step_size) << ",\"params\":[";
  for (std::size_t i = 0; i < g.params.size(); ++i) {
    if (i) body << ",";
    body << "{";
    write_tensor_json(body, g.params[i]);
    body << "}";
  }
  body << "]";
  if (g.kind == AttackKind::kIterativeSign) {
    body << ",\"surrogate\":{\"widths\":[";
    for (std::size_t i = 0; i < g.surrogate.spec.widths.size(); ++i)
      body << (i ? "," : "") << g.surrogate.spec.widths[i];
    body << "],\"activation\":\"" << activation_name(g.surrogate.spec.activation)
         << "\",\"seed\":" << g.surrogate.spec.seed << ",\"weights\":[";
    for (std::size_t i = 0; i < g.surrogate.weights.size(); ++i) {
      if (i) body << ",";
      body << "{";
      write_tensor_json(body, g.surrogate.weights[i]);
      body << "}";
    }
    body << "]}";
  }
  body << "}";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "IMMUNEKIT-ATTACK v1 " << attack_kind_name(g.kind) << " "
      << attack_hash(g) << "\n"
      << body.str();
  if (!out) throw IoError("write failed for " + path);
}

AttackModel load_attack(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty attack file");
  std::istringstream hs(header);
  std::string magic, version, kind, hash;
  hs >> magic >> version >> kind >> hash;
  if (magic != "IMMUNEKIT-ATTACK")
    throw FormatError(path + ": bad magic '" + magic + "'");
  if (version != "v1") throw FormatError(path + ": unsupported version " + version);

  nlohmann::json body;
  try {
    in >> body;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": body is not valid JSON: " + e.what());
  }

  AttackModel g;
  try {
    g.kind = attack_kind_from_name(body.at("kind").get<std::string>());
    g.eps = body.at("eps").get<double>();
    g.target = body.at("target").get<int>();
    g.seed = body.at("seed").get<std::uint64_t>();
    g.steps = body.at("steps").get<int>();
    g.step_size = body.at("step_size").get<double>();
    for (const auto& t : body.at("params")) g.params.push_back(read_tensor_json(t));
    if (g.kind == AttackKind::kIterativeSign) {
      const auto& s = body.at("surrogate");
      g.surrogate.spec.widths = s.at("widths").get<std::vector<std::size_t>>();
      g.surrogate.spec.activation =
          activation_from_name(s.at("activation").get<std::string>());
      g.surrogate.spec.seed = s.at("seed").get<std::uint64_t>();
      for (const auto& t : s.at("weights"))
        g.surrogate.weights.push_back(read_tensor_json(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed body: " + e.what());
  }
  if (kind != attack_kind_name(g.kind))
    throw ConsistencyError(path + ": header kind does not match body");
  if (hash != attack_hash(g))
    throw ConsistencyError(path + ": header hash does not match body");
  return g;
}

}  // namespace immunekit
