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
#ifndef IMMUNEKIT_IMMUNE_HPP_
#define IMMUNEKIT_IMMUNE_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "immunekit/attack.hpp"
#include "immunekit/model.hpp"
#include "immunekit/rng.hpp"

namespace immunekit {

enum class Method { kGsd, kOpt, kMgsd, kPmGsd, kPmMgsd, kVtGsd, kVtMgsd };

const char* method_name(Method m);
Method method_from_name(const std::string& name);
bool method_masked(Method m);
bool method_momentum(Method m);
bool method_variance_tuned(Method m);

// Test hook: force the mask to all-ones so masked and unmasked paths can be
// compared bit for bit.
enum class MaskMode { kFromGradients, kAllOnes };

struct ImmuneConfig {
  Method method = Method::kGsd;
  double lambda = 0.1;  // immune-loss weight
  double eta = 10.0;    // IP-loss weight (Opt only)
  double tau = 64.0;    // budget, 0-255 pixel scale
  std::size_t iterations = 5;  // T
  double alpha = 48.0;  // sign step size, 0-255 pixel scale
  double lr = 1e-3;     // Opt learning rate
  double mu = 1.0;      // momentum decay
  std::size_t n_vt = 20;
  double beta_vt = 1.5;
  std::uint64_t seed = 0;
  MaskMode mask_mode = MaskMode::kFromGradients;

  void validate() const;
  double tau_unit() const { return tau / 255.0; }
  double alpha_unit() const { return alpha / 255.0; }
};

struct IterationTrace {
  double immune_loss = 0.0;  // J(x_t, y)
  double adv_loss = 0.0;     // J(g(x_t), y)
  std::size_t masked_dims = 0;
};

struct ImmuneResult {
  Tensor x_ie;
  Tensor ip;  // x_ie - x
  std::vector<IterationTrace> trace;
  double linf = 0.0;  // ||ip||_inf in [0,1] units
};

// Reusable pair of tapes for one (f, g): the immune-loss graph and the
// adversarial-loss graph with the g(x) node exposed.
class DefenseGraphs {
 public:
  DefenseGraphs(const ModelParams& f, const AttackModel& g);

  // J(f(x), y); when grad is non-null also fills the unscaled input gradient.
  double immune_eval(const Tensor& x, int y, Tensor* grad = nullptr);
  // J(f(g(x)), y); optionally fills the gradient at the input and at the
  // g(x) node.
  double adversarial_eval(const Tensor& x, int y, Tensor* at_input = nullptr,
                          Tensor* at_output = nullptr);
  Tensor attack_output(const Tensor& x);
  // Jacobian-vector product of the attack map at x.
  Tensor attack_jvp(const Tensor& x, const Tensor& direction);

  std::size_t dim() const { return dim_; }

 private:
  Graph immune_;
  NodeId ix_, iloss_;
  Graph adv_;
  NodeId ax_, agx_, aloss_;
  std::size_t dim_;
};

// lambda * grad J(x,y) + grad J(g(x),y)   (Eq-style ensemble of both terms).
Tensor ensemble_gradient(const ModelParams& f, const AttackModel& g,
                         const Tensor& x, int y, double lambda);

// M_k = 1 iff grad_in_k / grad_out_k > 0; zero denominator gives 0.
Tensor compute_mask(const Tensor& grad_in, const Tensor& grad_out);

// lambda * grad J(x,y) + M o grad J(g(x),y); only the adversarial term is
// masked.
Tensor masked_ensemble_gradient(const ModelParams& f, const AttackModel& g,
                                const Tensor& x, int y, double lambda);

// v = mu * v_prev + grad / ||grad||_1 (zero grad passes mu * v_prev through).
Tensor momentum_accumulate(const Tensor& v_prev, const Tensor& grad, double mu);

struct VarianceTuneState {
  Tensor v;  // previous iteration's variance estimate
};

// Returns grad_t + state.v, then refreshes state.v from n_vt uniform
// neighbors in the (beta_vt * tau/255)-ball around x (mean neighbor gradient
// minus grad_t). n_vt == 0 leaves grad_t and the state untouched.
Tensor variance_tune(DefenseGraphs& dg, const Tensor& x, int y, double lambda,
                     const Tensor& grad_t, std::size_t n_vt, double beta_vt,
                     double tau, Rng& rng, VarianceTuneState& state, bool masked,
                     MaskMode mask_mode);

// ||-alpha * sign(grad)||_2, checked against alpha * sqrt(||grad||_0).
double sign_step_l2(const Tensor& grad, double alpha);

// Iterative sign descent (shared loop for GSD/MGSD and the PM/VT variants).
ImmuneResult craft_ie_gsd(const Tensor& x, int y, const ModelParams& f,
                          const AttackModel& g, const ImmuneConfig& cfg);

// Adam minimization of lambda*J(x',y) + J(g(x'),y) + eta*||x'-x||_inf over the
// tanh-reparameterized variable; returns the best iterate by total loss.
ImmuneResult craft_ie_opt(const Tensor& x, int y, const ModelParams& f,
                          const AttackModel& g, const ImmuneConfig& cfg);

ImmuneResult craft_ie(const Tensor& x, int y, const ModelParams& f,
                      const AttackModel& g, const ImmuneConfig& cfg);

struct ErrorProbeSeries {
  std::vector<double> mean_abs_error;     // per alpha
  std::vector<double> sd_abs_error;       // per alpha
  std::vector<double> step_l2;            // mean ||l||_2 per alpha
  // mean |error| per (alpha, example); used for paired comparisons
  std::vector<std::vector<double>> per_example_mean;
  // |J(g(x+l)) - J(g(x)) - grad^T l| per (alpha, example): linearization
  // error of the adversarial loss itself, the quantity the mask is meant to
  // keep first-order trustworthy.
  std::vector<std::vector<double>> per_example_loss_error;
};

struct ErrorProbeReport {
  std::vector<double> alpha_grid;  // 0-255 pixel scale
  ErrorProbeSeries unmasked;
  ErrorProbeSeries masked;
};

// Measures |g(x+l) - g(x) - Jg(x) l| per dimension over an ascending alpha
// grid, for both the raw and the masked step direction.
ErrorProbeReport approximation_error_probe(const ModelParams& f,
                                           const AttackModel& g,
                                           const std::vector<Example>& samples,
                                           const std::vector<double>& alpha_grid);

// Fraction of updated dimensions where the IE step and the induced change of
// g(x) share a sign after one lambda=0 sign step. No updated dimensions: 1.
double alignment_fraction(const ModelParams& f, const AttackModel& g,
                          const Tensor& x, int y, bool masked,
                          const ImmuneConfig& cfg);

}  // namespace immunekit

#endif  // IMMUNEKIT_IMMUNE_HPP_
