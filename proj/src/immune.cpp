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
#include "immunekit/immune.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace immunekit {

const char* method_name(Method m) {
  switch (m) {
    case Method::kGsd: return "GSD";
    case Method::kOpt: return "OPT";
    case Method::kMgsd: return "MGSD";
    case Method::kPmGsd: return "PM-GSD";
    case Method::kPmMgsd: return "PM-MGSD";
    case Method::kVtGsd: return "VT-GSD";
    case Method::kVtMgsd: return "VT-MGSD";
  }
  return "?";
}

Method method_from_name(const std::string& name) {
  for (Method m : {Method::kGsd, Method::kOpt, Method::kMgsd, Method::kPmGsd,
                   Method::kPmMgsd, Method::kVtGsd, Method::kVtMgsd})
    if (name == method_name(m)) return m;
  throw ConfigError("unknown immune method: " + name);
}

bool method_masked(Method m) {
  return m == Method::kMgsd || m == Method::kPmMgsd || m == Method::kVtMgsd;
}

bool method_momentum(Method m) {
  return m == Method::kPmGsd || m == Method::kPmMgsd;
}

bool method_variance_tuned(Method m) {
  return m == Method::kVtGsd || m == Method::kVtMgsd;
}

void ImmuneConfig::validate() const {
  if (tau < 0.0) throw ConfigError("immune config: tau must be >= 0");
  if (lambda < 0.0 || eta < 0.0)
    throw ConfigError("immune config: lambda and eta must be >= 0");
  if (method != Method::kOpt && !(alpha > 0.0))
    throw ConfigError("immune config: alpha must be > 0 for sign methods");
  if (method == Method::kOpt && !(lr > 0.0))
    throw ConfigError("immune config: lr must be > 0 for OPT");
}

DefenseGraphs::DefenseGraphs(const ModelParams& f, const AttackModel& g)
    : dim_(f.spec.input_dim()) {
  if (!attack_differentiable(g.kind))
    throw CapabilityError(std::string(attack_kind_name(g.kind)) +
                          " cannot be used as a defense crafting source");
  if (g.input_dim() != dim_)
    throw StructuralError("defense: classifier input dim does not match attack");

  ix_ = immune_.input({dim_});
  iloss_ = immune_.softmax_cross_entropy(append_classifier(immune_, f, ix_), 0);
  immune_.set_loss(iloss_);

  ax_ = adv_.input({dim_});
  agx_ = append_attack(adv_, g, ax_);
  aloss_ = adv_.softmax_cross_entropy(append_classifier(adv_, f, agx_), 0);
  adv_.set_loss(aloss_);
}

double DefenseGraphs::immune_eval(const Tensor& x, int y, Tensor* grad) {
  immune_.set_input(ix_, x);
  immune_.set_label(iloss_, y);
  const double loss = immune_.forward().v[0];
  if (grad) *grad = immune_.backward({ix_}).at(ix_);
  return loss;
}

double DefenseGraphs::adversarial_eval(const Tensor& x, int y, Tensor* at_input,
                                       Tensor* at_output) {
  adv_.set_input(ax_, x);
  adv_.set_label(aloss_, y);
  const double loss = adv_.forward().v[0];
  if (at_input || at_output) {
    std::set<NodeId> want;
    if (at_input) want.insert(ax_);
    if (at_output) want.insert(agx_);
    auto grads = adv_.backward(want);
    if (at_input) *at_input = grads.at(ax_);
    if (at_output) *at_output = grads.at(agx_);
  }
  return loss;
}

Tensor DefenseGraphs::attack_output(const Tensor& x) {
  adv_.set_input(ax_, x);
  adv_.forward();
  return adv_.value(agx_);
}

Tensor DefenseGraphs::attack_jvp(const Tensor& x, const Tensor& direction) {
  adv_.set_input(ax_, x);
  adv_.forward();
  return adv_.forward_tangent(ax_, direction, agx_);
}

Tensor compute_mask(const Tensor& grad_in, const Tensor& grad_out) {
  require_same_shape(grad_in, grad_out, "compute_mask");
  Tensor m(grad_in.shape);
  for (std::size_t k = 0; k < m.numel(); ++k) {
    const double gi = grad_in.v[k], go = grad_out.v[k];
    // Ratio gi/go > 0 iff both are nonzero with equal sign; go == 0 is the
    // stated zero-denominator convention.
    m.v[k] = (go != 0.0 && gi != 0.0 && std::signbit(gi) == std::signbit(go))
                 ? 1.0
                 : 0.0;
  }
  return m;
}

namespace {

// Combined immune + adversarial gradient at x; applies the mask to the
// adversarial term only. Returns the gradient; reports losses and the count
// of masked-out dimensions through the out-params.
Tensor combined_gradient(DefenseGraphs& dg, const Tensor& x, int y, double lambda,
                         bool masked, MaskMode mode, double* immune_loss,
                         double* adv_loss, std::size_t* masked_dims) {
  Tensor gi;
  const double jl = dg.immune_eval(x, y, lambda != 0.0 ? &gi : nullptr);
  Tensor ga_in, ga_out;
  const double ja =
      dg.adversarial_eval(x, y, &ga_in, masked ? &ga_out : nullptr);

  Tensor out(x.shape);
  std::size_t zeroed = 0;
  if (masked && mode == MaskMode::kFromGradients) {
    const Tensor m = compute_mask(ga_in, ga_out);
    for (std::size_t k = 0; k < out.numel(); ++k) {
      out.v[k] = m.v[k] * ga_in.v[k];
      if (m.v[k] == 0.0) ++zeroed;
    }
  } else {
    out = ga_in;
  }
  if (lambda != 0.0)
    for (std::size_t k = 0; k < out.numel(); ++k) out.v[k] += lambda * gi.v[k];

  if (immune_loss) *immune_loss = jl;
  if (adv_loss) *adv_loss = ja;
  if (masked_dims) *masked_dims = masked ? zeroed : 0;
  return out;
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

Tensor ensemble_gradient(const ModelParams& f, const AttackModel& g,
                         const Tensor& x, int y, double lambda) {
  DefenseGraphs dg(f, g);
  return combined_gradient(dg, x, y, lambda, false, MaskMode::kFromGradients,
                           nullptr, nullptr, nullptr);
}

Tensor masked_ensemble_gradient(const ModelParams& f, const AttackModel& g,
                                const Tensor& x, int y, double lambda) {
  DefenseGraphs dg(f, g);
  return combined_gradient(dg, x, y, lambda, true, MaskMode::kFromGradients,
                           nullptr, nullptr, nullptr);
}

Tensor momentum_accumulate(const Tensor& v_prev, const Tensor& grad, double mu) {
  require_same_shape(v_prev, grad, "momentum_accumulate");
  double l1 = 0.0;
  for (double x : grad.v) l1 += std::fabs(x);
  Tensor v(v_prev.shape);
  for (std::size_t k = 0; k < v.numel(); ++k) {
    v.v[k] = mu * v_prev.v[k];
    if (l1 != 0.0) v.v[k] += grad.v[k] / l1;
  }
  return v;
}

Tensor variance_tune(DefenseGraphs& dg, const Tensor& x, int y, double lambda,
                     const Tensor& grad_t, std::size_t n_vt, double beta_vt,
                     double tau, Rng& rng, VarianceTuneState& state, bool masked,
                     MaskMode mask_mode) {
  if (n_vt == 0) return grad_t;
  if (state.v.numel() == 0) state.v = Tensor(grad_t.shape);
  Tensor tuned(grad_t.shape);
  for (std::size_t k = 0; k < tuned.numel(); ++k)
    tuned.v[k] = grad_t.v[k] + state.v.v[k];

  const double radius = beta_vt * tau / 255.0;
  Tensor mean(grad_t.shape);
  for (std::size_t i = 0; i < n_vt; ++i) {
    Tensor neighbor = x;
    for (std::size_t k = 0; k < neighbor.numel(); ++k)
      neighbor.v[k] += rng.uniform(-radius, radius);
    const Tensor gn = combined_gradient(dg, neighbor, y, lambda, masked,
                                        mask_mode, nullptr, nullptr, nullptr);
    for (std::size_t k = 0; k < mean.numel(); ++k)
      mean.v[k] += gn.v[k] / double(n_vt);
  }
  for (std::size_t k = 0; k < mean.numel(); ++k)
    state.v.v[k] = mean.v[k] - grad_t.v[k];
  return tuned;
}

double sign_step_l2(const Tensor& grad, double alpha) {
  double sq = 0.0;
  std::size_t nnz = 0;
  for (double gk : grad.v) {
    const double lk = -alpha * sign_of(gk);
    sq += lk * lk;
    if (gk != 0.0) ++nnz;
  }
  const double l2 = std::sqrt(sq);
  const double identity = alpha * std::sqrt(double(nnz));
  if (std::fabs(l2 - identity) > 1e-12 * std::max(1.0, identity))
    throw NumericError("sign_step_l2: norm identity violated");
  return l2;
}

ImmuneResult craft_ie_gsd(const Tensor& x, int y, const ModelParams& f,
                          const AttackModel& g, const ImmuneConfig& cfg) {
  cfg.validate();
  if (cfg.method == Method::kOpt)
    throw UsageError("craft_ie_gsd: OPT is not a sign-descent method");
  DefenseGraphs dg(f, g);
  const bool masked = method_masked(cfg.method);
  const bool use_pm = method_momentum(cfg.method);
  const bool use_vt = method_variance_tuned(cfg.method);

  ImmuneResult res;
  Tensor cur = x;
  Tensor momentum(x.shape);
  VarianceTuneState vt_state;
  Rng vt_rng = Rng(cfg.seed).stream("vt-neighbors");

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    IterationTrace tr;
    Tensor grad = combined_gradient(dg, cur, y, cfg.lambda, masked, cfg.mask_mode,
                                    &tr.immune_loss, &tr.adv_loss,
                                    &tr.masked_dims);
    if (use_vt)
      grad = variance_tune(dg, cur, y, cfg.lambda, grad, cfg.n_vt, cfg.beta_vt,
                           cfg.tau, vt_rng, vt_state, masked, cfg.mask_mode);
    if (use_pm) {
      momentum = momentum_accumulate(momentum, grad, cfg.mu);
      grad = momentum;
    }
    Tensor stepped = cur;
    for (std::size_t k = 0; k < stepped.numel(); ++k)
      stepped.v[k] -= cfg.alpha_unit() * sign_of(grad.v[k]);
    cur = clip_to_ball(stepped, x, cfg.tau_unit(), 0.0, 1.0);
    res.trace.push_back(tr);
  }

  res.x_ie = cur;
  res.ip = Tensor(x.shape);
  for (std::size_t k = 0; k < x.numel(); ++k) res.ip.v[k] = cur.v[k] - x.v[k];
  res.linf = res.ip.max_abs();
  return res;
}

namespace {

// Subgradient of ||d||_inf: sign split evenly across the max-magnitude
// coordinates, zero at d = 0.
Tensor linf_subgradient(const Tensor& d) {
  Tensor s(d.shape);
  const double m = d.max_abs();
  if (m == 0.0) return s;
  std::size_t ties = 0;
  for (double v : d.v)
    if (std::fabs(v) == m) ++ties;
  for (std::size_t k = 0; k < d.numel(); ++k)
    if (std::fabs(d.v[k]) == m) s.v[k] = sign_of(d.v[k]) / double(ties);
  return s;
}

}  // namespace

ImmuneResult craft_ie_opt(const Tensor& x, int y, const ModelParams& f,
                          const AttackModel& g, const ImmuneConfig& cfg) {
  cfg.validate();
  ImmuneResult res;
  if (cfg.iterations == 0) {
    res.x_ie = x;
    res.ip = Tensor(x.shape);
    res.linf = 0.0;
    return res;
  }

  DefenseGraphs dg(f, g);
  const std::size_t n = x.numel();

  // Pixel box handled by x' = (tanh(w)+1)/2; w starts at the inverse
  // transform of x clamped into the open interval.
  Tensor w({n});
  for (std::size_t k = 0; k < n; ++k) {
    const double z = 2.0 * std::clamp(x.v[k], 1e-6, 1.0 - 1e-6) - 1.0;
    w.v[k] = 0.5 * std::log((1.0 + z) / (1.0 - z));
  }

  std::vector<Tensor> wparams = {w};
  AdamState adam = AdamState::like(wparams, cfg.lr);

  Tensor best_x;
  double best_total = 0.0;
  bool have_best = false;

  auto to_x = [&](const Tensor& wt) {
    Tensor xt({n});
    for (std::size_t k = 0; k < n; ++k)
      xt.v[k] = (std::tanh(wt.v[k]) + 1.0) / 2.0;
    return xt;
  };

  for (std::size_t t = 0; t < cfg.iterations; ++t) {
    const Tensor xt = to_x(wparams[0]);
    Tensor gi, ga;
    const double ji = dg.immune_eval(xt, y, &gi);
    const double ja = dg.adversarial_eval(xt, y, &ga);
    Tensor d({n});
    for (std::size_t k = 0; k < n; ++k) d.v[k] = xt.v[k] - x.v[k];
    const double total = cfg.lambda * ji + ja + cfg.eta * d.max_abs();
    if (!std::isfinite(total))
      throw NumericError("craft_ie_opt: objective diverged at iteration " +
                         std::to_string(t));
    IterationTrace tr;
    tr.immune_loss = ji;
    tr.adv_loss = ja;
    res.trace.push_back(tr);
    if (!have_best || total < best_total) {
      best_total = total;
      best_x = xt;
      have_best = true;
    }

    const Tensor sub = linf_subgradient(d);
    std::vector<Tensor> grad_w = {Tensor({n})};
    for (std::size_t k = 0; k < n; ++k) {
      const double gx = cfg.lambda * gi.v[k] + ga.v[k] + cfg.eta * sub.v[k];
      const double th = std::tanh(wparams[0].v[k]);
      grad_w[0].v[k] = gx * (1.0 - th * th) / 2.0;
    }
    adam_step(adam, wparams, grad_w);
  }

  // Final iterate competes for best as well.
  {
    const Tensor xt = to_x(wparams[0]);
    const double ji = dg.immune_eval(xt, y);
    const double ja = dg.adversarial_eval(xt, y);
    Tensor d({n});
    for (std::size_t k = 0; k < n; ++k) d.v[k] = xt.v[k] - x.v[k];
    const double total = cfg.lambda * ji + ja + cfg.eta * d.max_abs();
    if (!have_best || total < best_total) best_x = xt;
  }

  res.x_ie = best_x;
  res.ip = Tensor(x.shape);
  for (std::size_t k = 0; k < n; ++k) res.ip.v[k] = best_x.v[k] - x.v[k];
  res.linf = res.ip.max_abs();
  return res;
}

ImmuneResult craft_ie(const Tensor& x, int y, const ModelParams& f,
                      const AttackModel& g, const ImmuneConfig& cfg) {
  return cfg.method == Method::kOpt ? craft_ie_opt(x, y, f, g, cfg)
                                    : craft_ie_gsd(x, y, f, g, cfg);
}

ErrorProbeReport approximation_error_probe(const ModelParams& f,
                                           const AttackModel& g,
                                           const std::vector<Example>& samples,
                                           const std::vector<double>& alpha_grid) {
  if (alpha_grid.empty()) throw UsageError("error probe: empty alpha grid");
  for (std::size_t i = 0; i + 1 < alpha_grid.size(); ++i)
    if (!(alpha_grid[i] > 0.0) || alpha_grid[i] >= alpha_grid[i + 1])
      throw UsageError("error probe: alpha grid must be positive ascending");
  if (samples.empty()) throw UsageError("error probe: no samples");

  DefenseGraphs dg(f, g);
  ErrorProbeReport rep;
  rep.alpha_grid = alpha_grid;
  const std::size_t na = alpha_grid.size();
  for (ErrorProbeSeries* s : {&rep.unmasked, &rep.masked}) {
    s->mean_abs_error.assign(na, 0.0);
    s->sd_abs_error.assign(na, 0.0);
    s->step_l2.assign(na, 0.0);
    s->per_example_mean.assign(na, {});
    s->per_example_loss_error.assign(na, {});
  }

  // Accumulators for mean/sd over all (dimension, sample) pairs.
  std::vector<double> sum_u(na, 0.0), sumsq_u(na, 0.0);
  std::vector<double> sum_m(na, 0.0), sumsq_m(na, 0.0);
  std::size_t total_dims = 0;

  for (const Example& ex : samples) {
    Tensor ga_in, ga_out;
    const double j0 = dg.adversarial_eval(ex.x, ex.label, &ga_in, &ga_out);
    const Tensor mask = compute_mask(ga_in, ga_out);

    Tensor dir_u(ex.x.shape), dir_m(ex.x.shape);
    for (std::size_t k = 0; k < ex.x.numel(); ++k) {
      dir_u.v[k] = -sign_of(ga_in.v[k]);
      dir_m.v[k] = -sign_of(mask.v[k] * ga_in.v[k]);
    }
    // The Jacobian-vector product is linear in the step, so one pass per
    // direction serves the whole alpha grid.
    const Tensor jvp_u = dg.attack_jvp(ex.x, dir_u);
    const Tensor jvp_m = dg.attack_jvp(ex.x, dir_m);
    const Tensor gx0 = dg.attack_output(ex.x);
    total_dims += ex.x.numel();

    for (std::size_t a = 0; a < na; ++a) {
      const double au = alpha_grid[a] / 255.0;
      for (int pass = 0; pass < 2; ++pass) {
        const Tensor& dir = pass == 0 ? dir_u : dir_m;
        const Tensor& jvp = pass == 0 ? jvp_u : jvp_m;
        ErrorProbeSeries& s = pass == 0 ? rep.unmasked : rep.masked;
        std::vector<double>& sum = pass == 0 ? sum_u : sum_m;
        std::vector<double>& sumsq = pass == 0 ? sumsq_u : sumsq_m;

        Tensor xl = ex.x;
        double l2 = 0.0, lin = 0.0;
        for (std::size_t k = 0; k < xl.numel(); ++k) {
          xl.v[k] += au * dir.v[k];
          l2 += au * au * dir.v[k] * dir.v[k];
          lin += ga_in.v[k] * au * dir.v[k];
        }
        const Tensor gx1 = dg.attack_output(xl);
        double ex_sum = 0.0;
        for (std::size_t k = 0; k < gx0.numel(); ++k) {
          const double err =
              std::fabs(gx1.v[k] - gx0.v[k] - au * jvp.v[k]);
          ex_sum += err;
          sum[a] += err;
          sumsq[a] += err * err;
        }
        s.per_example_mean[a].push_back(ex_sum / double(gx0.numel()));
        Tensor li, lo;
        const double j1 = dg.adversarial_eval(xl, ex.label, &li, &lo);
        s.per_example_loss_error[a].push_back(std::fabs(j1 - j0 - lin));
        s.step_l2[a] += std::sqrt(l2) / double(samples.size());
      }
    }
  }

  for (std::size_t a = 0; a < na; ++a) {
    const double nd = double(total_dims);
    rep.unmasked.mean_abs_error[a] = sum_u[a] / nd;
    rep.masked.mean_abs_error[a] = sum_m[a] / nd;
    const double var_u =
        std::max(0.0, sumsq_u[a] / nd - rep.unmasked.mean_abs_error[a] *
                                            rep.unmasked.mean_abs_error[a]);
    const double var_m =
        std::max(0.0, sumsq_m[a] / nd - rep.masked.mean_abs_error[a] *
                                            rep.masked.mean_abs_error[a]);
    rep.unmasked.sd_abs_error[a] = std::sqrt(var_u);
    rep.masked.sd_abs_error[a] = std::sqrt(var_m);
  }
  return rep;
}

double alignment_fraction(const ModelParams& f, const AttackModel& g,
                          const Tensor& x, int y, bool masked,
                          const ImmuneConfig& cfg) {
  DefenseGraphs dg(f, g);
  Tensor ga_in, ga_out;
  dg.adversarial_eval(x, y, &ga_in, masked ? &ga_out : nullptr);
  Tensor dir = ga_in;
  if (masked) {
    const Tensor m = compute_mask(ga_in, ga_out);
    for (std::size_t k = 0; k < dir.numel(); ++k) dir.v[k] *= m.v[k];
  }
  Tensor stepped = x;
  for (std::size_t k = 0; k < stepped.numel(); ++k)
    stepped.v[k] -= cfg.alpha_unit() * sign_of(dir.v[k]);
  const Tensor x1 = clip_to_ball(stepped, x, cfg.tau_unit(), 0.0, 1.0);

  const Tensor gx0 = dg.attack_output(x);
  const Tensor gx1 = dg.attack_output(x1);
  std::size_t updated = 0, aligned = 0;
  for (std::size_t k = 0; k < x.numel(); ++k) {
    const double dx = x1.v[k] - x.v[k];
    if (dx == 0.0) continue;
    ++updated;
    if (dx * (gx1.v[k] - gx0.v[k]) > 0.0) ++aligned;
  }
  if (updated == 0) return 1.0;  // no misalignment occurred
  return double(aligned) / double(updated);
}

}  // namespace immunekit
