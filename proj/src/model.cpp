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
#include "immunekit/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "immunekit/rng.hpp"
#include "immunekit/serialize.hpp"

namespace immunekit {

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "?";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw ConfigError("unknown activation: " + name);
}

void ClassifierSpec::validate() const {
  if (widths.size() < 2) throw ConfigError("classifier spec needs >= 2 layers");
  if (class_count() < 2) throw ConfigError("classifier spec needs >= 2 classes");
  for (std::size_t w : widths)
    if (w == 0) throw ConfigError("classifier spec has a zero-width layer");
}

std::string spec_hash(const ClassifierSpec& spec) {
  std::ostringstream os;
  os << "mlp;widths=";
  for (std::size_t i = 0; i < spec.widths.size(); ++i)
    os << (i ? "," : "") << spec.widths[i];
  os << ";act=" << activation_name(spec.activation) << ";seed=" << spec.seed;
  return fnv1a_hex(os.str());
}

AdamState AdamState::like(const std::vector<Tensor>& params, double lr) {
  AdamState s;
  s.lr = lr;
  for (const Tensor& p : params) {
    s.m.push_back(Tensor(p.shape));
    s.v.push_back(Tensor(p.shape));
  }
  return s;
}

void adam_step(AdamState& state, std::vector<Tensor>& params,
               const std::vector<Tensor>& grads) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw UsageError("adam_step: parameter/gradient count mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < params[i].numel(); ++k) {
      const double g = grads[i].v[k];
      m.v[k] = state.beta1 * m.v[k] + (1.0 - state.beta1) * g;
      v.v[k] = state.beta2 * v.v[k] + (1.0 - state.beta2) * g * g;
      const double mhat = m.v[k] / bc1;
      const double vhat = v.v[k] / bc2;
      params[i].v[k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads,
              double lr) {
  if (params.size() != grads.size())
    throw UsageError("sgd_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "sgd_step");
    for (std::size_t k = 0; k < params[i].numel(); ++k)
      params[i].v[k] -= lr * grads[i].v[k];
  }
}

ModelParams init_classifier(const ClassifierSpec& spec) {
  spec.validate();
  ModelParams p;
  p.spec = spec;
  Rng base(spec.seed);
  for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
    const std::size_t in = spec.widths[layer], out = spec.widths[layer + 1];
    Rng rw = base.stream("init/W", layer);
    const double s = std::sqrt(6.0 / double(in + out));
    Tensor w({out, in});
    for (double& x : w.v) x = rw.uniform(-s, s);
    p.weights.push_back(std::move(w));
    p.weights.push_back(Tensor({out}));  // zero bias
  }
  return p;
}

namespace {

Tensor logits_of(const ModelParams& p, const Tensor& x) {
  if (x.shape != std::vector<std::size_t>{p.spec.input_dim()})
    throw StructuralError("predict: input shape " + shape_str(x.shape) +
                          " does not match spec input " +
                          std::to_string(p.spec.input_dim()));
  Tensor cur = x;
  const std::size_t layers = p.weights.size() / 2;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    const Tensor& w = p.weights[2 * layer];
    const Tensor& b = p.weights[2 * layer + 1];
    const std::size_t out = w.shape[0], in = w.shape[1];
    Tensor next({out});
    for (std::size_t r = 0; r < out; ++r) {
      const double* wr = &w.v[r * in];
      double acc = b.v[r];
      for (std::size_t c = 0; c < in; ++c) acc += wr[c] * cur.v[c];
      next.v[r] = acc;
    }
    if (layer + 1 < layers) {
      switch (p.spec.activation) {
        case Activation::kRelu:
          for (double& v : next.v) v = v > 0.0 ? v : 0.0;
          break;
        case Activation::kTanh:
          for (double& v : next.v) v = std::tanh(v);
          break;
        case Activation::kSigmoid:
          for (double& v : next.v) v = 1.0 / (1.0 + std::exp(-v));
          break;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace

Prediction predict(const ModelParams& params, const Tensor& x) {
  Prediction pred;
  pred.logits = logits_of(params, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < pred.logits.numel(); ++k)
    if (pred.logits.v[k] > pred.logits.v[best]) best = k;  // ties: lowest index
  pred.class_id = static_cast<int>(best);
  return pred;
}

double accuracy(const ModelParams& params, const Dataset& data) {
  if (data.size() == 0) throw UsageError("accuracy: empty dataset");
  std::size_t hit = 0;
  for (const Example& ex : data.examples)
    if (predict(params, ex.x).class_id == ex.label) ++hit;
  return double(hit) / double(data.size());
}

NodeId append_classifier(Graph& g, const ModelParams& params, NodeId x,
                         std::vector<NodeId>* param_nodes) {
  NodeId cur = x;
  const std::size_t layers = params.weights.size() / 2;
  for (std::size_t layer = 0; layer < layers; ++layer) {
    NodeId w = g.param(params.weights[2 * layer]);
    NodeId b = g.param(params.weights[2 * layer + 1]);
    if (param_nodes) {
      param_nodes->push_back(w);
      param_nodes->push_back(b);
    }
    cur = g.affine(cur, w, b);
    if (layer + 1 < layers) {
      switch (params.spec.activation) {
        case Activation::kRelu: cur = g.relu(cur); break;
        case Activation::kTanh: cur = g.tanh_(cur); break;
        case Activation::kSigmoid: cur = g.sigmoid(cur); break;
      }
    }
  }
  return cur;
}

ModelParams train_classifier(const Dataset& train, const Dataset& holdout,
                             const ClassifierSpec& spec,
                             const OptimizerConfig& opt, std::size_t epochs,
                             TrainingReport* report) {
  if (train.size() == 0) throw UsageError("train_classifier: empty dataset");
  for (const Example& ex : train.examples)
    if (ex.label < 0 || ex.label >= static_cast<int>(spec.class_count()))
      throw UsageError("train_classifier: label out of range");

  ModelParams model = init_classifier(spec);

  Graph g;
  NodeId x = g.input({spec.input_dim()});
  std::vector<NodeId> pnodes;
  NodeId logits = append_classifier(g, model, x, &pnodes);
  NodeId loss = g.softmax_cross_entropy(logits, 0);
  g.set_loss(loss);
  std::set<NodeId> want(pnodes.begin(), pnodes.end());

  AdamState adam = AdamState::like(model.weights, opt.lr);
  Rng base(spec.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainingReport rep;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    Rng shuf = base.stream("train/shuffle", epoch);
    shuf.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch) {
      const std::size_t end = std::min(start + opt.batch, order.size());
      std::vector<Tensor> grads;
      for (const Tensor& w : model.weights) grads.push_back(Tensor(w.shape));
      for (std::size_t i = start; i < end; ++i) {
        const Example& ex = train.examples[order[i]];
        g.set_input(x, ex.x);
        g.set_label(loss, ex.label);
        epoch_loss += g.forward().v[0];
        auto bg = g.backward(want);
        for (std::size_t j = 0; j < pnodes.size(); ++j) {
          const Tensor& pg = bg.at(pnodes[j]);
          for (std::size_t k = 0; k < pg.numel(); ++k)
            grads[j].v[k] += pg.v[k] / double(end - start);
        }
      }
      if (opt.kind == OptimizerKind::kAdam)
        adam_step(adam, model.weights, grads);
      else
        sgd_step(model.weights, grads, opt.lr);
      // Push updated weights back into the graph constants.
      for (std::size_t j = 0; j < pnodes.size(); ++j)
        g.param_value(pnodes[j]) = model.weights[j];
    }
    epoch_loss /= double(train.size());
    if (!std::isfinite(epoch_loss))
      throw TrainingError("train_classifier: loss diverged at epoch " +
                          std::to_string(epoch));
    rep.epoch_loss.push_back(epoch_loss);
  }

  model.epochs_trained = epochs;
  rep.train_accuracy = accuracy(model, train);
  rep.holdout_accuracy = holdout.size() ? accuracy(model, holdout) : 0.0;
  if (report) *report = rep;
  return model;
}

void save_weights(const ModelParams& params, const std::string& path) {
  std::ostringstream body;
  body << "{\"layers\":[";
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (i) body << ",";
    const char* role = (i % 2 == 0) ? "W" : "b";
    body << "{\"name\":\"" << role << (i / 2) << "\",";
    write_tensor_json(body, params.weights[i]);
    body << "}";
  }
  body << "],\"metadata\":{\"seed\":" << params.spec.seed
       << ",\"epochs\":" << params.epochs_trained << ",\"widths\":[";
  for (std::size_t i = 0; i < params.spec.widths.size(); ++i)
    body << (i ? "," : "") << params.spec.widths[i];
  body << "],\"activation\":\"" << activation_name(params.spec.activation)
       << "\"}}";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "IMMUNEKIT-WEIGHTS v1 " << spec_hash(params.spec) << "\n" << body.str();
  if (!out) throw IoError("write failed for " + path);
}

ModelParams load_weights(const std::string& path, const std::string& expected_hash) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty weight file");
  std::istringstream hs(header);
  std::string magic, version, hash;
  hs >> magic >> version >> hash;
  if (magic != "IMMUNEKIT-WEIGHTS")
    throw FormatError(path + ": bad magic '" + magic + "'");
  if (version != "v1") throw FormatError(path + ": unsupported version " + version);
  if (!expected_hash.empty() && hash != expected_hash)
    throw ConsistencyError(path + ": spec hash mismatch (file " + hash + ", expected " +
                      expected_hash + ")");

  nlohmann::json body;
  try {
    in >> body;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": body is not valid JSON: " + e.what());
  }

  ModelParams p;
  try {
    const auto& meta = body.at("metadata");
    p.spec.seed = meta.at("seed").get<std::uint64_t>();
    p.epochs_trained = meta.at("epochs").get<std::size_t>();
    p.spec.widths = meta.at("widths").get<std::vector<std::size_t>>();
    p.spec.activation = activation_from_name(meta.at("activation").get<std::string>());
    for (const auto& layer : body.at("layers"))
      p.weights.push_back(read_tensor_json(layer));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": malformed body: " + e.what());
  }
  p.spec.validate();
  if (p.weights.size() != 2 * (p.spec.widths.size() - 1))
    throw ConsistencyError(path + ": layer count does not match widths");
  if (hash != spec_hash(p.spec))
    throw ConsistencyError(path + ": header hash does not match body spec");
  for (const Tensor& w : p.weights)
    if (!w.all_finite()) throw NumericError(path + ": non-finite weight value");
  return p;
}

}  // namespace immunekit
