#pragma once
// Minimal dense feed-forward engine: input -> hidden (ReLU) -> output, with a
// categorical (softmax) or Gaussian (mean, log-variance) head. Reverse-mode
// gradients with respect to parameters and inputs, batch-mean reduction.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rcad/rng.hpp"
#include "rcad/special_math.hpp"

namespace rcad::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Head { kCategorical, kGaussian };

struct MlpModel {
  MatrixXd W1;  // hidden x in
  VectorXd b1;  // hidden
  MatrixXd W2;  // out x hidden
  VectorXd b2;  // out
  Head head = Head::kCategorical;

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_dim() const { return static_cast<int>(W1.rows()); }
  int output_dim() const { return static_cast<int>(W2.rows()); }
  int num_classes() const { return output_dim(); }

  // He-style init: W ~ N(0, 2/fan_in), biases zero. Row-major fill order so a
  // seed pins every weight.
  static MlpModel make(int in, int hidden, int out, Head head, Rng& rng) {
    if (in < 1 || hidden < 1 || out < 1)
      throw std::invalid_argument("MlpModel::make: dims must be positive");
    if (head == Head::kGaussian && out != 2)
      throw std::invalid_argument(
          "MlpModel::make: Gaussian head needs 2 outputs (mean, log-variance)");
    MlpModel m;
    m.head = head;
    m.W1.resize(hidden, in);
    m.b1 = VectorXd::Zero(hidden);
    m.W2.resize(out, hidden);
    m.b2 = VectorXd::Zero(out);
    const double s1 = std::sqrt(2.0 / in), s2 = std::sqrt(2.0 / hidden);
    for (int i = 0; i < hidden; ++i)
      for (int j = 0; j < in; ++j) m.W1(i, j) = rng.normal(0.0, s1);
    for (int i = 0; i < out; ++i)
      for (int j = 0; j < hidden; ++j) m.W2(i, j) = rng.normal(0.0, s2);
    return m;
  }

  static MlpModel make_classifier(int in, int hidden, int classes, Rng& rng) {
    return make(in, hidden, classes, Head::kCategorical, rng);
  }
  static MlpModel make_regressor(int in, int hidden, Rng& rng) {
    return make(in, hidden, 2, Head::kGaussian, rng);
  }
};

struct Batch {
  MatrixXd inputs;             // n x in
  std::vector<int> labels;     // categorical targets (class indices)
  VectorXd targets;            // regression targets

  int size() const { return static_cast<int>(inputs.rows()); }

  void validate(const MlpModel& m) const {
    if (inputs.cols() != m.input_dim())
      throw std::invalid_argument("Batch: input width does not match model");
    if (inputs.rows() == 0) throw std::invalid_argument("Batch: empty batch");
    if (m.head == Head::kCategorical) {
      if (static_cast<int>(labels.size()) != size())
        throw std::invalid_argument("Batch: labels/inputs row mismatch");
      for (int y : labels)
        if (y < 0 || y >= m.num_classes())
          throw std::invalid_argument("Batch: class index out of range");
    } else {
      if (targets.size() != size())
        throw std::invalid_argument("Batch: targets/inputs row mismatch");
    }
  }
};

struct GradientPack {
  MatrixXd dW1;
  VectorXd db1;
  MatrixXd dW2;
  VectorXd db2;
  MatrixXd dX;  // batch x in (gradient of the mean loss w.r.t. inputs)

  static GradientPack zeros_like(const MlpModel& m) {
    GradientPack g;
    g.dW1 = MatrixXd::Zero(m.W1.rows(), m.W1.cols());
    g.db1 = VectorXd::Zero(m.b1.size());
    g.dW2 = MatrixXd::Zero(m.W2.rows(), m.W2.cols());
    g.db2 = VectorXd::Zero(m.b2.size());
    return g;
  }

  void axpy(double a, const GradientPack& o) {
    dW1 += a * o.dW1;
    db1 += a * o.db1;
    dW2 += a * o.dW2;
    db2 += a * o.db2;
  }

  double squared_norm() const {
    return dW1.squaredNorm() + db1.squaredNorm() + dW2.squaredNorm() +
           db2.squaredNorm();
  }

  void scale(double a) {
    dW1 *= a;
    db1 *= a;
    dW2 *= a;
    db2 *= a;
  }
};

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

struct ForwardCache {
  MatrixXd pre1;  // n x hidden
  MatrixXd h1;    // relu(pre1)
  MatrixXd out;   // n x out (logits, or [mean, log-variance])
};

inline ForwardCache forward_cache(const MlpModel& m, const MatrixXd& X) {
  if (X.cols() != m.input_dim())
    throw std::invalid_argument("forward: input width does not match model");
  ForwardCache c;
  c.pre1.noalias() = X * m.W1.transpose();
  c.pre1.rowwise() += m.b1.transpose();
  c.h1 = c.pre1.cwiseMax(0.0);
  c.out.noalias() = c.h1 * m.W2.transpose();
  c.out.rowwise() += m.b2.transpose();
  return c;
}

// Row-wise softmax with max subtraction.
inline MatrixXd softmax_rows(const MatrixXd& logits) {
  MatrixXd p = logits;
  for (int i = 0; i < p.rows(); ++i) {
    const double mx = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - mx).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct Predictions {
  Head head;
  MatrixXd probs;     // categorical: n x K
  VectorXd mean;      // gaussian
  VectorXd variance;  // gaussian, exp(log-variance) > 0 by construction

  CategoricalDist categorical(int row) const {
    std::vector<double> p(probs.cols());
    for (int j = 0; j < probs.cols(); ++j) p[j] = probs(row, j);
    return CategoricalDist(std::move(p));
  }
  GaussianDist gaussian(int row) const {
    return GaussianDist(mean[row], variance[row]);
  }
};

inline Predictions forward(const MlpModel& m, const MatrixXd& X) {
  const ForwardCache c = forward_cache(m, X);
  Predictions p;
  p.head = m.head;
  if (m.head == Head::kCategorical) {
    p.probs = softmax_rows(c.out);
  } else {
    p.mean = c.out.col(0);
    p.variance = c.out.col(1).array().exp();
  }
  return p;
}

// ---------------------------------------------------------------------------
// Losses and reverse-mode gradients
// ---------------------------------------------------------------------------

enum class LossKind { kNll, kLabelSmoothed, kPredictionEntropy };

namespace detail {

// log-softmax of one row, stable.
inline VectorXd log_softmax_row(const Eigen::RowVectorXd& logits) {
  const double mx = logits.maxCoeff();
  const Eigen::ArrayXd shifted = (logits.array() - mx).transpose();
  const double lse = std::log(shifted.exp().sum());
  return (shifted - lse).matrix();
}

inline double nll_value(const MlpModel& m, const Batch& b, const ForwardCache& c) {
  const int n = b.size();
  double acc = 0.0;
  if (m.head == Head::kCategorical) {
    for (int i = 0; i < n; ++i) {
      const VectorXd ls = log_softmax_row(c.out.row(i));
      acc -= ls[b.labels[i]];
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const double mu = c.out(i, 0), lv = c.out(i, 1);
      const double r = b.targets[i] - mu;
      acc += 0.5 * (std::log(2.0 * kPi) + lv + r * r * std::exp(-lv));
    }
  }
  return acc / n;
}

// d(mean loss)/d(out) for each loss kind.
inline MatrixXd output_grad(const MlpModel& m, const Batch& b,
                            const ForwardCache& c, LossKind kind,
                            double epsilon) {
  const int n = b.size();
  MatrixXd dOut(c.out.rows(), c.out.cols());
  if (m.head == Head::kCategorical) {
    const int k = m.num_classes();
    const MatrixXd P = softmax_rows(c.out);
    switch (kind) {
      case LossKind::kNll:
        dOut = P;
        for (int i = 0; i < n; ++i) dOut(i, b.labels[i]) -= 1.0;
        break;
      case LossKind::kLabelSmoothed: {
        if (k < 2)
          throw std::invalid_argument("label smoothing: needs K >= 2 classes");
        const double off = epsilon / (k - 1);
        dOut = (P.array() - off).matrix();
        for (int i = 0; i < n; ++i)
          dOut(i, b.labels[i]) -= (1.0 - epsilon) - off;
        break;
      }
      case LossKind::kPredictionEntropy:
        // dH/dz_j = -p_j (log p_j + H)
        for (int i = 0; i < n; ++i) {
          double h = 0.0;
          for (int j = 0; j < k; ++j)
            if (P(i, j) > 0.0) h -= P(i, j) * std::log(P(i, j));
          for (int j = 0; j < k; ++j) {
            const double pj = P(i, j);
            dOut(i, j) = pj > 0.0 ? -pj * (std::log(pj) + h) : 0.0;
          }
        }
        break;
    }
  } else {
    switch (kind) {
      case LossKind::kNll:
        for (int i = 0; i < n; ++i) {
          const double mu = c.out(i, 0), lv = c.out(i, 1);
          const double r = b.targets[i] - mu;
          dOut(i, 0) = -r * std::exp(-lv);
          dOut(i, 1) = 0.5 - 0.5 * r * r * std::exp(-lv);
        }
        break;
      case LossKind::kPredictionEntropy:
        dOut.col(0).setZero();
        dOut.col(1).setConstant(0.5);
        break;
      case LossKind::kLabelSmoothed:
        throw std::invalid_argument("label smoothing: categorical head only");
    }
  }
  return dOut / n;
}

inline GradientPack backprop(const MlpModel& m, const MatrixXd& X,
                             const ForwardCache& c, const MatrixXd& dOut) {
  GradientPack g;
  g.dW2.noalias() = dOut.transpose() * c.h1;
  g.db2 = dOut.colwise().sum();
  MatrixXd dH1 = dOut * m.W2;
  // ReLU subgradient at 0 taken as 0.
  dH1 = (c.pre1.array() > 0.0).select(dH1, 0.0);
  g.dW1.noalias() = dH1.transpose() * X;
  g.db1 = dH1.colwise().sum();
  g.dX.noalias() = dH1 * m.W1;
  return g;
}

}  // namespace detail

// Mean loss value for the given kind.
inline double loss_value(const MlpModel& m, const Batch& b, LossKind kind,
                         double epsilon = 0.0) {
  b.validate(m);
  const ForwardCache c = forward_cache(m, b.inputs);
  const int n = b.size();
  switch (kind) {
    case LossKind::kNll:
      return detail::nll_value(m, b, c);
    case LossKind::kLabelSmoothed: {
      if (m.head != Head::kCategorical)
        throw std::invalid_argument("label smoothing: categorical head only");
      const int k = m.num_classes();
      if (k < 2) throw std::invalid_argument("label smoothing: needs K >= 2");
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const VectorXd ls = detail::log_softmax_row(c.out.row(i));
        const double off = epsilon / (k - 1);
        for (int j = 0; j < k; ++j)
          acc -= (j == b.labels[i] ? 1.0 - epsilon : off) * ls[j];
      }
      return acc / n;
    }
    case LossKind::kPredictionEntropy: {
      if (m.head == Head::kCategorical) {
        const MatrixXd P = softmax_rows(c.out);
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < P.cols(); ++j)
            if (P(i, j) > 0.0) acc -= P(i, j) * std::log(P(i, j));
        return acc / n;
      }
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        acc += 0.5 * std::log(2.0 * kPi * std::exp(1.0)) + 0.5 * c.out(i, 1);
      return acc / n;
    }
  }
  throw std::invalid_argument("loss_value: unknown loss kind");
}

inline double nll_loss(const MlpModel& m, const Batch& b) {
  return loss_value(m, b, LossKind::kNll);
}

// Gradients of the mean loss with respect to parameters and inputs.
inline GradientPack backward(const MlpModel& m, const Batch& b, LossKind kind,
                             double epsilon = 0.0) {
  b.validate(m);
  const ForwardCache c = forward_cache(m, b.inputs);
  const MatrixXd dOut = detail::output_grad(m, b, c, kind, epsilon);
  return detail::backprop(m, b.inputs, c, dOut);
}

// Per-sample gradient of the per-sample NLL with respect to each input row
// (no 1/n): the raw adversarial direction of Eq-style example generation.
inline MatrixXd input_grad_nll(const MlpModel& m, const Batch& b) {
  GradientPack g = backward(m, b, LossKind::kNll);
  return g.dX * static_cast<double>(b.size());
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

// Heavy-ball SGD: v <- momentum*v + g; w <- w - lr*v. In-place, deterministic.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {
    if (!(lr >= 0.0)) throw std::invalid_argument("SgdOptimizer: lr >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0))
      throw std::invalid_argument("SgdOptimizer: momentum in [0,1)");
  }

  void step(MlpModel& m, const GradientPack& g) {
    if (!has_velocity_) {
      v_ = GradientPack::zeros_like(m);
      has_velocity_ = true;
    }
    v_.scale(momentum_);
    v_.axpy(1.0, g);
    m.W1 -= lr_ * v_.dW1;
    m.b1 -= lr_ * v_.db1;
    m.W2 -= lr_ * v_.dW2;
    m.b2 -= lr_ * v_.db2;
  }

 private:
  double lr_;
  double momentum_;
  GradientPack v_;
  bool has_velocity_ = false;
};

// Single plain step (momentum-free convenience form).
inline void sgd_step(MlpModel& m, const GradientPack& g, double lr) {
  SgdOptimizer(lr, 0.0).step(m, g);
}

}  // namespace rcad::nn
