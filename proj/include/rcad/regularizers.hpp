#pragma once
// Training objectives over micro_nn models: confidence reduction along
// adversarial directions, label smoothing, FGSM adversarial training, and a
// maximum-entropy adversarial augmenter. Example generation is always
// stop-gradient: the generated inputs are constants when differentiating the
// objective with respect to parameters.

#include <cmath>
#include <stdexcept>

#include "rcad/micro_nn.hpp"

namespace rcad::reg {

using nn::Batch;
using nn::GradientPack;
using nn::LossKind;
using nn::MlpModel;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct RcadConfig {
  double alpha = 0.5;   // input-space step size
  double lambda = 0.1;  // entropy weight

  RcadConfig() = default;
  RcadConfig(double a, double l) : alpha(a), lambda(l) {
    if (!(std::isfinite(a) && a >= 0.0))
      throw std::invalid_argument("RcadConfig: alpha must be finite and >= 0");
    if (!(std::isfinite(l) && l >= 0.0))
      throw std::invalid_argument("RcadConfig: lambda must be finite and >= 0");
  }
};

struct SmoothingConfig {
  double epsilon = 0.0;
  SmoothingConfig() = default;
  explicit SmoothingConfig(double e) : epsilon(e) {
    if (!(e >= 0.0 && e < 1.0))
      throw std::invalid_argument("SmoothingConfig: epsilon must lie in [0,1)");
  }
};

struct MeAdaConfig {
  double entropy_weight = 1.0;   // weight on H(x0) in the inner objective
  double distance_weight = 1.0;  // weight on |x0 - x|^2
  int inner_steps = 15;
  double inner_lr = 0.1;
  int augment_rounds = 2;

  void validate() const {
    if (!(entropy_weight >= 0.0))
      throw std::invalid_argument("MeAdaConfig: entropy_weight >= 0");
    if (!(distance_weight >= 0.0))
      throw std::invalid_argument("MeAdaConfig: distance_weight >= 0");
    if (inner_steps < 1) throw std::invalid_argument("MeAdaConfig: inner_steps >= 1");
    if (!(inner_lr > 0.0)) throw std::invalid_argument("MeAdaConfig: inner_lr > 0");
    if (augment_rounds < 1)
      throw std::invalid_argument("MeAdaConfig: augment_rounds >= 1");
  }
};

// Loss value plus the parameter gradients a trainer needs to take a step.
struct LossResult {
  double loss = 0.0;
  GradientPack grads;
};

struct RcadDiagnostics {
  double entropy_term = 0.0;       // mean predictive entropy at the new points
  double mean_perturb_norm = 0.0;  // mean ||x_adv - x||_2
};

struct RcadResult {
  double loss = 0.0;
  GradientPack grads;
  RcadDiagnostics diag;
};

// x_adv = x - alpha * grad_x log p(y|x), per sample (stop-gradient).
inline MatrixXd rcad_example(const MlpModel& m, const Batch& b, double alpha) {
  return b.inputs + alpha * nn::input_grad_nll(m, b);
}

// Mean NLL at the clean inputs minus lambda times the mean predictive entropy
// at the generated points. lambda = 0 short-circuits to the plain NLL path so
// the degenerate case is arithmetic-identical to cross-entropy training.
inline RcadResult rcad_loss(const MlpModel& m, const Batch& b,
                            const RcadConfig& cfg) {
  b.validate(m);
  RcadResult r;
  if (cfg.lambda == 0.0) {
    r.loss = nn::nll_loss(m, b);
    r.grads = nn::backward(m, b, LossKind::kNll);
    return r;
  }
  GradientPack nll_grads = nn::backward(m, b, LossKind::kNll);
  const MatrixXd x_adv =
      b.inputs + cfg.alpha * (nll_grads.dX * static_cast<double>(b.size()));
  Batch adv = b;
  adv.inputs = x_adv;
  const double entropy = nn::loss_value(m, adv, LossKind::kPredictionEntropy);
  GradientPack ent_grads = nn::backward(m, adv, LossKind::kPredictionEntropy);

  r.loss = nn::nll_loss(m, b) - cfg.lambda * entropy;
  r.grads = std::move(nll_grads);
  r.grads.axpy(-cfg.lambda, ent_grads);
  r.diag.entropy_term = entropy;
  r.diag.mean_perturb_norm = (x_adv - b.inputs).rowwise().norm().mean();
  return r;
}

// Smoothed cross entropy with off-target mass epsilon/(K-1). epsilon = 0 is
// the plain NLL path, bit for bit.
inline LossResult label_smoothing_loss(const MlpModel& m, const Batch& b,
                                       const SmoothingConfig& cfg) {
  b.validate(m);
  LossResult r;
  if (cfg.epsilon == 0.0) {
    r.loss = nn::nll_loss(m, b);
    r.grads = nn::backward(m, b, LossKind::kNll);
    return r;
  }
  r.loss = nn::loss_value(m, b, LossKind::kLabelSmoothed, cfg.epsilon);
  r.grads = nn::backward(m, b, LossKind::kLabelSmoothed, cfg.epsilon);
  return r;
}

// x - alpha * sign(grad_x log p(y|x)); sign(0) = 0.
inline MatrixXd fgsm_example(const MlpModel& m, const Batch& b, double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("fgsm_example: alpha >= 0");
  const MatrixXd g = nn::input_grad_nll(m, b);  // = -grad_x log p
  return b.inputs + alpha * g.unaryExpr([](double v) {
    return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
  });
}

// NLL at the FGSM points with the original labels.
inline LossResult adversarial_training_loss(const MlpModel& m, const Batch& b,
                                            double alpha) {
  b.validate(m);
  Batch adv = b;
  adv.inputs = fgsm_example(m, b, alpha);
  LossResult r;
  r.loss = nn::nll_loss(m, adv);
  r.grads = nn::backward(m, adv, LossKind::kNll);
  return r;
}

// One augmentation round: per source sample, inner_steps of gradient ascent on
//   NLL(x0, y) + entropy_weight * H(x0) - distance_weight * |x0 - x|^2
// starting from x0 = x. Returns the batch of (x_tilde, y) pairs.
inline Batch me_ada_augment(const MlpModel& m, const Batch& b,
                            const MeAdaConfig& cfg) {
  cfg.validate();
  b.validate(m);
  const double n = static_cast<double>(b.size());
  MatrixXd x0 = b.inputs;
  Batch cur = b;
  for (int step = 0; step < cfg.inner_steps; ++step) {
    cur.inputs = x0;
    const MatrixXd g_nll = nn::backward(m, cur, LossKind::kNll).dX * n;
    const MatrixXd g_ent =
        nn::backward(m, cur, LossKind::kPredictionEntropy).dX * n;
    const MatrixXd ascent = g_nll + cfg.entropy_weight * g_ent -
                            2.0 * cfg.distance_weight * (x0 - b.inputs);
    x0 += cfg.inner_lr * ascent;
  }
  Batch out = b;
  out.inputs = x0;
  return out;
}

// Inner objective value, exposed for the ascent-progress checks.
inline VectorXd me_ada_inner_objective(const MlpModel& m, const Batch& source,
                                       const MatrixXd& x0,
                                       const MeAdaConfig& cfg) {
  Batch cur = source;
  cur.inputs = x0;
  const nn::ForwardCache c = nn::forward_cache(m, x0);
  const int n = source.size();
  VectorXd vals(n);
  for (int i = 0; i < n; ++i) {
    double nll, ent;
    if (m.head == nn::Head::kCategorical) {
      const VectorXd ls = nn::detail::log_softmax_row(c.out.row(i));
      nll = -ls[source.labels[i]];
      ent = 0.0;
      for (int j = 0; j < ls.size(); ++j) ent -= std::exp(ls[j]) * ls[j];
    } else {
      const double mu = c.out(i, 0), lv = c.out(i, 1);
      const double r = source.targets[i] - mu;
      nll = 0.5 * (std::log(2.0 * kPi) + lv + r * r * std::exp(-lv));
      ent = 0.5 * std::log(2.0 * kPi * std::exp(1.0)) + 0.5 * lv;
    }
    const double dist = (x0.row(i) - source.inputs.row(i)).squaredNorm();
    vals[i] = nll + cfg.entropy_weight * ent - cfg.distance_weight * dist;
  }
  return vals;
}

}  // namespace rcad::reg
