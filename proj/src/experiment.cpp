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
#include "immunekit/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "immunekit/serialize.hpp"

namespace immunekit {

namespace fs = std::filesystem;

namespace {

void check_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object())
    throw ConfigError("config: " + where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
}

template <typename T>
void read_opt(const nlohmann::json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

DatasetSpec parse_dataset(const nlohmann::json& j) {
  DatasetSpec d;
  d.kind = j.at("kind").get<std::string>();
  if (d.kind == "synthetic") {
    check_keys(j, {"kind", "per_class", "n", "classes", "spread"}, "dataset");
    read_opt(j, "per_class", d.per_class);
    read_opt(j, "n", d.n);
    read_opt(j, "classes", d.classes);
    read_opt(j, "spread", d.spread);
  } else if (d.kind == "mnist-idx") {
    check_keys(j, {"kind", "images", "labels"}, "dataset");
    d.images = j.at("images").get<std::string>();
    d.labels = j.at("labels").get<std::string>();
  } else {
    throw ConfigError("config: unknown dataset kind \"" + d.kind + "\"");
  }
  return d;
}

ImmuneConfig parse_immune(const nlohmann::json& j) {
  check_keys(j,
             {"method", "lambda", "eta", "tau", "iterations", "alpha", "lr",
              "mu", "n_vt", "beta_vt"},
             "immune");
  ImmuneConfig c;
  c.method = method_from_name(j.at("method").get<std::string>());
  read_opt(j, "lambda", c.lambda);
  read_opt(j, "eta", c.eta);
  read_opt(j, "tau", c.tau);
  read_opt(j, "iterations", c.iterations);
  read_opt(j, "alpha", c.alpha);
  read_opt(j, "lr", c.lr);
  read_opt(j, "mu", c.mu);
  read_opt(j, "n_vt", c.n_vt);
  read_opt(j, "beta_vt", c.beta_vt);
  c.validate();
  return c;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << content;
  if (!os.flush()) throw IoError("write failed: " + path);
}

// Timestamps live here and only here so report files stay byte-identical
// across reruns.
void write_run_meta(const std::string& out_dir, const std::string& command,
                    std::uint64_t seed) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  nlohmann::json m;
  m["command"] = command;
  m["seed"] = seed;
  m["unix_millis"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(now).count();
  write_file(out_dir + "/run_meta.json", m.dump(2) + "\n");
}

std::string fmt(double x) {
  if (!std::isfinite(x)) throw NumericError("report: non-finite value");
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

// Eval subset shared by craft and evaluate: the head of the deterministic
// test split.
std::vector<Example> eval_subset(const Dataset& data, std::size_t n_eval,
                                 std::uint64_t seed) {
  Splits s = split(data, 0.7, 0.15, 0.15, seed);
  if (s.test.size() < n_eval)
    throw ConfigError("n_eval " + std::to_string(n_eval) +
                      " exceeds test split size " + std::to_string(s.test.size()));
  return {s.test.examples.begin(), s.test.examples.begin() + long(n_eval)};
}

}  // namespace

Dataset DatasetSpec::load(std::uint64_t seed) const {
  if (kind == "synthetic") return synth_dataset(seed, per_class, n, classes, spread);
  return load_mnist_idx(images, labels);
}

ExperimentConfig parse_config(const nlohmann::json& j, const std::string& command) {
  if (!j.contains("schema") || !j.at("schema").is_number_integer() ||
      j.at("schema").get<int>() != 1)
    throw ConfigError("config: missing or unsupported schema version");

  std::set<std::string> allowed = {"schema", "dataset"};
  if (command == "train-classifier") allowed.insert("classifier");
  if (command == "train-attack")
    allowed.insert({"attack", "classifier_path"});
  if (command == "craft")
    allowed.insert({"classifier_path", "source_attack", "immune", "n_eval"});
  if (command == "evaluate")
    allowed.insert({"classifier_path", "source_attack", "target_attacks",
                    "ie_archive", "immune", "n_eval"});
  if (command == "ablate")
    allowed.insert({"classifier_path", "source_attack", "target_attacks",
                    "immune", "n_eval", "sweep"});
  check_keys(j, allowed, "root");

  ExperimentConfig c;
  c.dataset = parse_dataset(j.at("dataset"));

  if (command == "train-classifier") {
    const nlohmann::json& cl = j.at("classifier");
    check_keys(cl, {"hidden", "activation", "epochs", "lr", "batch",
                    "accuracy_floor"},
               "classifier");
    read_opt(cl, "hidden", c.hidden);
    read_opt(cl, "activation", c.activation);
    read_opt(cl, "epochs", c.epochs);
    read_opt(cl, "lr", c.lr);
    read_opt(cl, "batch", c.batch);
    read_opt(cl, "accuracy_floor", c.accuracy_floor);
  }
  if (command == "train-attack") {
    c.classifier_path = j.at("classifier_path").get<std::string>();
    c.epochs = AttackTrainConfig{}.epochs;
    c.lr = AttackTrainConfig{}.lr;
    const nlohmann::json& a = j.at("attack");
    check_keys(a, {"kind", "eps", "target", "steps", "step_size", "epochs",
                   "lr", "asr_floor"},
               "attack");
    c.attack_kind = a.at("kind").get<std::string>();
    read_opt(a, "eps", c.attack_eps);
    read_opt(a, "target", c.attack_target);
    read_opt(a, "steps", c.attack_steps);
    read_opt(a, "step_size", c.attack_step_size);
    read_opt(a, "epochs", c.epochs);
    read_opt(a, "lr", c.lr);
    read_opt(a, "asr_floor", c.asr_floor);
    if (!(c.attack_eps > 0.0))
      throw ConfigError("config: attack eps must be positive");
  }
  if (command == "craft" || command == "evaluate" || command == "ablate") {
    c.classifier_path = j.at("classifier_path").get<std::string>();
    c.source_attack_path = j.at("source_attack").get<std::string>();
    c.immune = parse_immune(j.at("immune"));
    read_opt(j, "n_eval", c.n_eval);
  }
  if (command == "evaluate") {
    c.ie_archive_path = j.at("ie_archive").get<std::string>();
    read_opt(j, "target_attacks", c.target_attack_paths);
  }
  if (command == "ablate") {
    read_opt(j, "target_attacks", c.target_attack_paths);
    const nlohmann::json& s = j.at("sweep");
    check_keys(s, {"param", "grid"}, "sweep");
    c.sweep_param = s.at("param").get<std::string>();
    c.sweep_grid = s.at("grid").get<std::vector<double>>();
    if (c.sweep_param != "T" && c.sweep_param != "tau" && c.sweep_param != "alpha")
      throw ConfigError("config: sweep param must be T, tau, or alpha");
    if (c.sweep_grid.empty()) throw ConfigError("config: sweep grid is empty");
    for (std::size_t i = 0; i + 1 < c.sweep_grid.size(); ++i)
      if (!(c.sweep_grid[i] < c.sweep_grid[i + 1]))
        throw ConfigError("config: sweep grid must be strictly ascending");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path, const std::string& command) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  return parse_config(j, command);
}

void save_tensor_archive(const std::vector<Tensor>& tensors,
                         const std::string& path) {
  std::ostringstream body;
  body << "{\"kind\":\"tensor-archive\",\"count\":" << tensors.size()
       << ",\"tensors\":[";
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (i) body << ",";
    body << "{";
    write_tensor_json(body, tensors[i]);
    body << "}";
  }
  body << "]}";
  const std::string b = body.str();
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << "IMMUNEKIT-WEIGHTS v1 " << fnv1a_hex(b) << "\n" << b << "\n";
  if (!os.flush()) throw IoError("write failed: " + path);
}

std::vector<Tensor> load_tensor_archive(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path);
  std::string header;
  std::getline(is, header);
  std::istringstream hs(header);
  std::string magic, version, hash;
  hs >> magic >> version >> hash;
  if (magic != "IMMUNEKIT-WEIGHTS" || version != "v1")
    throw FormatError("tensor archive " + path + ": bad header \"" + header + "\"");
  std::string body((std::istreambuf_iterator<char>(is)),
                   std::istreambuf_iterator<char>());
  while (!body.empty() && (body.back() == '\n' || body.back() == '\r'))
    body.pop_back();
  if (fnv1a_hex(body) != hash)
    throw ConsistencyError("tensor archive " + path + ": digest mismatch");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("tensor archive " + path + ": " + e.what());
  }
  if (j.at("kind").get<std::string>() != "tensor-archive")
    throw FormatError("tensor archive " + path + ": wrong body kind");
  std::vector<Tensor> out;
  for (const auto& t : j.at("tensors")) out.push_back(read_tensor_json(t));
  if (out.size() != j.at("count").get<std::size_t>())
    throw ConsistencyError("tensor archive " + path + ": count mismatch");
  return out;
}

OutputLock::OutputLock(const std::string& out_dir) {
  fs::create_directories(out_dir);
  path_ = out_dir + "/.lock";
  // O_EXCL-style create: fails when another command holds the directory.
  if (fs::exists(path_))
    throw StateError("output directory is locked by another run: " + path_);
  write_file(path_, "locked\n");
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

std::string report_csv_header() {
  return "method,source_attack,target_attack,is_whitebox,n_eval,accuracy,"
         "asr_raw,asr_ie,vasr,ir,uiqi_mean,linf_max,seed";
}

std::string report_csv_row(const ReportRow& r) {
  std::ostringstream os;
  os << r.method << "," << r.source_attack << "," << r.target_attack << ","
     << (r.is_whitebox ? 1 : 0) << "," << r.n_eval << "," << fmt(r.accuracy)
     << "," << fmt(r.asr_raw) << "," << fmt(r.asr_ie) << "," << fmt(r.vasr)
     << "," << fmt(r.ir) << "," << fmt(r.uiqi_mean) << "," << fmt(r.linf_max)
     << "," << r.seed;
  return os.str();
}

int cmd_train_classifier(const ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir) {
  OutputLock lock(out_dir);
  write_run_meta(out_dir, "train-classifier", seed);

  Dataset data = cfg.dataset.load(seed);
  Splits s = split(data, 0.7, 0.15, 0.15, seed);

  ClassifierSpec spec;
  spec.widths.push_back(data.dim());
  for (std::size_t w : cfg.hidden) spec.widths.push_back(w);
  spec.widths.push_back(std::size_t(data.classes));
  spec.activation = activation_from_name(cfg.activation);
  spec.seed = seed;

  OptimizerConfig opt;
  opt.lr = cfg.lr;
  opt.batch = cfg.batch;
  TrainingReport rep;
  ModelParams params = train_classifier(s.train, s.val, spec, opt, cfg.epochs, &rep);
  const double test_acc = accuracy(params, s.test);
  save_weights(params, out_dir + "/classifier.weights");

  nlohmann::json r;
  r["train_accuracy"] = rep.train_accuracy;
  r["holdout_accuracy"] = rep.holdout_accuracy;
  r["test_accuracy"] = test_acc;
  r["epochs"] = cfg.epochs;
  r["final_epoch_loss"] = rep.epoch_loss.empty() ? 0.0 : rep.epoch_loss.back();
  write_file(out_dir + "/train_report.json", r.dump(2) + "\n");

  std::cout << "classifier test accuracy " << fmt(test_acc) << "\n";
  if (test_acc < cfg.accuracy_floor) {
    std::cerr << "accuracy " << fmt(test_acc) << " below floor "
              << fmt(cfg.accuracy_floor) << "\n";
    return 1;
  }
  return 0;
}

int cmd_train_attack(const ExperimentConfig& cfg, std::uint64_t seed,
                     const std::string& out_dir) {
  OutputLock lock(out_dir);
  write_run_meta(out_dir, "train-attack", seed);

  ModelParams f = load_weights(cfg.classifier_path);
  Dataset data = cfg.dataset.load(seed);
  Splits s = split(data, 0.7, 0.15, 0.15, seed);

  AttackTrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.lr = cfg.lr;
  tc.asr_floor = 0.0;  // the floor is checked here, after measurement

  const AttackKind kind = attack_kind_from_name(cfg.attack_kind);
  AttackModel g;
  switch (kind) {
    case AttackKind::kPerturbGenerator:
      g = train_perturb_generator(f, s.train, s.val, cfg.attack_eps, seed, tc);
      break;
    case AttackKind::kTargetedAutoencoder:
      g = train_targeted_autoencoder(f, s.train, s.val, cfg.attack_target,
                                     cfg.attack_eps, seed, tc);
      break;
    case AttackKind::kUniversalPerturbation:
      g = train_universal_perturbation(f, s.train, s.val, cfg.attack_eps, seed, tc);
      break;
    case AttackKind::kIterativeSign:
      g = make_iterative_sign(f, cfg.attack_eps, cfg.attack_steps,
                              cfg.attack_step_size);
      break;
  }
  const double held_asr = attack_asr(f, g, s.test);
  save_attack(g, out_dir + "/attack.atk");

  nlohmann::json r;
  r["kind"] = attack_kind_name(kind);
  r["eps"] = cfg.attack_eps;
  r["holdout_asr"] = held_asr;
  r["hash"] = attack_hash(g);
  write_file(out_dir + "/attack_report.json", r.dump(2) + "\n");

  std::cout << "attack " << attack_kind_name(kind) << " held-out ASR "
            << fmt(held_asr) << "\n";
  if (held_asr < cfg.asr_floor) {
    std::cerr << "ASR " << fmt(held_asr) << " below floor " << fmt(cfg.asr_floor)
              << "\n";
    return 1;
  }
  return 0;
}

namespace {

// Crafts IEs for the subset; every sign-method iterate must already respect
// the budget, so a violation here is an internal bug, not recoverable data.
std::vector<Tensor> craft_all(const std::vector<Example>& subset,
                              const ModelParams& f, const AttackModel& g,
                              const ImmuneConfig& base, std::uint64_t seed,
                              std::vector<ImmuneResult>* results) {
  std::vector<Tensor> ies;
  ies.reserve(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    ImmuneConfig c = base;
    c.seed = Rng(seed).stream("craft/ie", i).next_u64();
    ImmuneResult res = craft_ie(subset[i].x, subset[i].label, f, g, c);
    if (c.method != Method::kOpt && res.linf > c.tau_unit() + 1e-9)
      throw StateError("craft: budget violated on example " + std::to_string(i) +
                       " (linf " + std::to_string(res.linf) + " > tau " +
                       std::to_string(c.tau_unit()) + ")");
    ies.push_back(res.x_ie);
    if (results) results->push_back(std::move(res));
  }
  return ies;
}

}  // namespace

int cmd_craft(const ExperimentConfig& cfg, std::uint64_t seed,
              const std::string& out_dir) {
  OutputLock lock(out_dir);
  write_run_meta(out_dir, "craft", seed);

  ModelParams f = load_weights(cfg.classifier_path);
  AttackModel g = load_attack(cfg.source_attack_path);
  Dataset data = cfg.dataset.load(seed);
  std::vector<Example> subset = eval_subset(data, cfg.n_eval, seed);

  std::vector<ImmuneResult> results;
  std::vector<Tensor> ies = craft_all(subset, f, g, cfg.immune, seed, &results);

  save_tensor_archive(ies, out_dir + "/ies.tns");
  std::vector<Tensor> ips;
  for (const ImmuneResult& r : results) ips.push_back(r.ip);
  save_tensor_archive(ips, out_dir + "/ips.tns");

  std::ostringstream trace;
  trace << "example,iteration,immune_loss,adv_loss,masked_dims\n";
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t t = 0; t < results[i].trace.size(); ++t)
      trace << i << "," << t << "," << fmt(results[i].trace[t].immune_loss)
            << "," << fmt(results[i].trace[t].adv_loss) << ","
            << results[i].trace[t].masked_dims << "\n";
  write_file(out_dir + "/craft_trace.csv", trace.str());

  double linf_max = 0.0;
  for (const ImmuneResult& r : results) linf_max = std::max(linf_max, r.linf);
  std::cout << "crafted " << ies.size() << " IEs, max linf "
            << fmt(255.0 * linf_max) << " (pixel scale)\n";
  return 0;
}

namespace {

void write_outcomes_csv(const std::string& path,
                        const std::vector<OutcomeRecord>& records) {
  std::ostringstream os;
  os << "id,label,target,raw_correct,raw_adv_correct,ie_correct,ie_adv_correct,"
        "excluded\n";
  for (const OutcomeRecord& r : records) {
    os << r.id << "," << r.label << "," << (r.target ? *r.target : -1) << ","
       << int(*r.raw_correct) << "," << int(*r.raw_adv_correct) << ","
       << int(*r.ie_correct) << "," << int(*r.ie_adv_correct) << ","
       << int(r.excluded_targeted()) << "\n";
  }
  write_file(path, os.str());
}

}  // namespace

int cmd_evaluate(const ExperimentConfig& cfg, std::uint64_t seed,
                 const std::string& out_dir) {
  OutputLock lock(out_dir);
  write_run_meta(out_dir, "evaluate", seed);

  ModelParams f = load_weights(cfg.classifier_path);
  AttackModel source = load_attack(cfg.source_attack_path);
  const std::string source_hash = attack_hash(source);
  std::vector<Tensor> ies = load_tensor_archive(cfg.ie_archive_path);

  Dataset data = cfg.dataset.load(seed);
  std::vector<Example> subset = eval_subset(data, cfg.n_eval, seed);
  if (ies.size() != subset.size())
    throw ConsistencyError("evaluate: IE archive size does not match n_eval");

  std::vector<std::pair<std::string, AttackModel>> targets;
  targets.emplace_back(cfg.source_attack_path, source);
  for (const std::string& p : cfg.target_attack_paths)
    targets.emplace_back(p, load_attack(p));

  std::ostringstream csv;
  csv << report_csv_header() << "\n";
  nlohmann::json jrows = nlohmann::json::array();
  for (std::size_t ti = 0; ti < targets.size(); ++ti) {
    const auto& [path, g] = targets[ti];
    const std::string tname =
        std::string(attack_kind_name(g.kind)) + "#" + std::to_string(ti);
    nlohmann::json jr;
    jr["method"] = method_name(cfg.immune.method);
    jr["source_attack"] = attack_kind_name(source.kind);
    jr["target_attack"] = tname;
    jr["is_whitebox"] = attack_hash(g) == source_hash;
    jr["n_eval"] = subset.size();
    jr["seed"] = seed;
    try {
      EvalReport rep = build_eval_report(f, subset, g, ies, data.rows, data.cols);
      write_outcomes_csv(out_dir + "/outcomes_" + std::to_string(ti) + ".csv",
                         rep.records);
      ReportRow row;
      row.method = method_name(cfg.immune.method);
      row.source_attack = attack_kind_name(source.kind);
      row.target_attack = tname;
      row.is_whitebox = attack_hash(g) == source_hash;
      row.n_eval = subset.size();
      row.accuracy = rep.ie_accuracy;
      row.asr_raw = rep.asr_raw;
      row.asr_ie = rep.asr_ie;
      row.vasr = rep.vasr;
      row.ir = rep.ir;
      row.uiqi_mean = rep.uiqi_mean;
      row.linf_max = rep.linf_max;
      row.seed = seed;
      csv << report_csv_row(row) << "\n";
      jr["accuracy"] = rep.ie_accuracy;
      jr["asr_raw"] = rep.asr_raw;
      jr["asr_ie"] = rep.asr_ie;
      jr["vasr"] = rep.vasr;
      jr["ir"] = rep.ir;
      jr["uiqi_mean"] = rep.uiqi_mean;
      jr["linf_max"] = rep.linf_max;
      jr["undefined_reason"] = nullptr;
    } catch (const UndefinedMetricError& e) {
      // Undefined rates surface as explicit nulls, never silent zeros.
      csv << method_name(cfg.immune.method) << ","
          << attack_kind_name(source.kind) << "," << tname << ","
          << (attack_hash(g) == source_hash ? 1 : 0) << "," << subset.size()
          << ",null,null,null,null,null,null,null," << seed << "\n";
      for (const char* k :
           {"accuracy", "asr_raw", "asr_ie", "vasr", "ir", "uiqi_mean",
            "linf_max"})
        jr[k] = nullptr;
      jr["undefined_reason"] = e.what();
    }
    jrows.push_back(jr);
  }
  write_file(out_dir + "/report.csv", csv.str());
  write_file(out_dir + "/report.json", jrows.dump(2) + "\n");
  std::cout << "evaluated " << targets.size() << " target attacks over "
            << subset.size() << " examples\n";
  return 0;
}

int cmd_ablate(const ExperimentConfig& cfg, std::uint64_t seed,
               const std::string& out_dir) {
  OutputLock lock(out_dir);
  write_run_meta(out_dir, "ablate", seed);

  ModelParams f = load_weights(cfg.classifier_path);
  AttackModel source = load_attack(cfg.source_attack_path);
  Dataset data = cfg.dataset.load(seed);
  std::vector<Example> subset = eval_subset(data, cfg.n_eval, seed);

  std::vector<std::pair<std::string, AttackModel>> targets;
  for (const std::string& p : cfg.target_attack_paths)
    targets.emplace_back(p, load_attack(p));

  std::ostringstream csv;
  csv << "param,value,accuracy,ir_whitebox,uiqi_mean";
  for (std::size_t ti = 0; ti < targets.size(); ++ti)
    csv << ",ir_target" << ti;
  csv << "\n";
  // Partial results are preserved: rows flushed per grid point, completion
  // marker only after the whole grid.
  const std::string series_path = out_dir + "/ablation.csv";
  write_file(series_path, csv.str());

  for (double value : cfg.sweep_grid) {
    ImmuneConfig ic = cfg.immune;
    if (cfg.sweep_param == "T") {
      if (value < 0.0 || value != std::floor(value))
        throw ConfigError("ablate: T grid values must be whole and >= 0");
      ic.iterations = std::size_t(value);
    } else if (cfg.sweep_param == "tau") {
      ic.tau = value;
    } else {
      ic.alpha = value;
    }

    std::vector<Tensor> ies = craft_all(subset, f, source, ic, seed, nullptr);
    EvalReport white = build_eval_report(f, subset, source, ies, data.rows,
                                         data.cols);
    std::ostringstream row;
    row << cfg.sweep_param << "," << fmt(value) << "," << fmt(white.ie_accuracy)
        << "," << fmt(white.ir) << "," << fmt(white.uiqi_mean);
    for (const auto& [path, g] : targets) {
      EvalReport rep = build_eval_report(f, subset, g, ies, data.rows, data.cols);
      row << "," << fmt(rep.ir);
    }
    row << "\n";
    csv << row.str();
    write_file(series_path, csv.str());
    std::cout << "ablate " << cfg.sweep_param << "=" << fmt(value) << " done\n";
  }
  write_file(out_dir + "/grid_complete", "complete\n");
  return 0;
}

}  // namespace immunekit
