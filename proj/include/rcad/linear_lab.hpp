#pragma once
// Linear-classifier testbed: Gaussian-mixture data, margin-loss ERM,
// entropy-surrogate ascent (finite-sample and population closed form),
// and the exact population test error.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcad/rng.hpp"
#include "rcad/special_math.hpp"

namespace rcad::linear {

using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

// Mixture of Eq-style two-class data: y uniform in {-1,+1},
// x1 ~ N(beta*y, sigma1^2), x2 ~ N(0, diag(sigma2_diag)).
struct GaussianMixtureSpec {
  int d;                  // noise dimension
  double beta;            // class separation
  double sigma1;          // true-feature std
  VectorXd sigma2_diag;   // diagonal of the noise covariance (variances)

  GaussianMixtureSpec(int d_, double beta_, double sigma1_, VectorXd s2)
      : d(d_), beta(beta_), sigma1(sigma1_), sigma2_diag(std::move(s2)) {
    if (d < 1) throw std::invalid_argument("GaussianMixtureSpec: d >= 1 required");
    if (!(beta > 0.0))
      throw std::invalid_argument("GaussianMixtureSpec: beta must be positive");
    if (!(sigma1 >= 0.0))
      throw std::invalid_argument("GaussianMixtureSpec: sigma1 must be >= 0");
    if (sigma2_diag.size() != d)
      throw std::invalid_argument("GaussianMixtureSpec: sigma2_diag size != d");
    for (int i = 0; i < d; ++i)
      if (!(sigma2_diag[i] > 0.0))
        throw std::invalid_argument(
            "GaussianMixtureSpec: noise variances must be positive");
  }

  static GaussianMixtureSpec isotropic(int d, double beta, double sigma1,
                                       double noise_var = 1.0) {
    return GaussianMixtureSpec(d, beta, sigma1, VectorXd::Constant(d, noise_var));
  }

  // Smallest eigenvalue of Sigma_tilde = diag(sigma1^2, Sigma_2).
  double sigma_min() const {
    double m = sigma1 * sigma1;
    for (int i = 0; i < d; ++i) m = std::min(m, sigma2_diag[i]);
    return m;
  }
};

// Homogeneous linear predictor w = [w1, w2] on the unit ball.
struct LinearModel {
  double w1 = 0.0;
  VectorXd w2;

  LinearModel() = default;
  LinearModel(double w1_, VectorXd w2_) : w1(w1_), w2(std::move(w2_)) {}

  int dim() const { return 1 + static_cast<int>(w2.size()); }
  double norm() const { return std::sqrt(w1 * w1 + w2.squaredNorm()); }
  double w2_norm() const { return w2.norm(); }

  VectorXd as_vector() const {
    VectorXd v(dim());
    v[0] = w1;
    v.tail(w2.size()) = w2;
    return v;
  }
  static LinearModel from_vector(const VectorXd& v) {
    return LinearModel(v[0], v.tail(v.size() - 1));
  }
};

struct MarginParams {
  double gamma;  // margin
  double rho;    // training-error budget
  MarginParams(double g, double r) : gamma(g), rho(r) {
    if (!(gamma > 0.0)) throw std::invalid_argument("MarginParams: gamma > 0");
    if (!(rho > 0.0 && rho < 1.0))
      throw std::invalid_argument("MarginParams: rho must lie in (0,1)");
  }
};

struct AscentConfig {
  double alpha = 0.0;  // perturbation step size
  double eta = 0.1;    // learning rate
  int iters = 100;

  AscentConfig() = default;
  AscentConfig(double a, double e, int t) : alpha(a), eta(e), iters(t) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("AscentConfig: alpha >= 0");
    if (!(eta >= 0.0)) throw std::invalid_argument("AscentConfig: eta >= 0");
    if (iters < 1) throw std::invalid_argument("AscentConfig: iters >= 1");
  }
};

struct LabeledSample {
  VectorXd x;
  int y;  // exactly -1 or +1
};

using Dataset = std::vector<LabeledSample>;

// sigma_w = sqrt(w' Sigma_tilde w), a_w = (beta*w1 - gamma)/sigma_w.
struct DerivedStats {
  double sigma_w;
  double a_w;
};

inline double sigma_w_of(const LinearModel& m, const GaussianMixtureSpec& spec) {
  const double s1sq = spec.sigma1 * spec.sigma1;
  return std::sqrt(s1sq * m.w1 * m.w1 +
                   (spec.sigma2_diag.array() * m.w2.array().square()).sum());
}

inline DerivedStats derived_stats(const LinearModel& m,
                                  const GaussianMixtureSpec& spec, double gamma) {
  DerivedStats s;
  s.sigma_w = sigma_w_of(m, spec);
  if (!(s.sigma_w > 0.0))
    throw std::invalid_argument("derived_stats: degenerate sigma_w");
  s.a_w = (spec.beta * m.w1 - gamma) / s.sigma_w;
  return s;
}

// ---------------------------------------------------------------------------
// Sampling and elementary pieces
// ---------------------------------------------------------------------------

inline Dataset sample_mixture(const GaussianMixtureSpec& spec, int n,
                              std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_mixture: n >= 1 required");
  Rng rng(seed);
  Dataset data(n);
  for (int i = 0; i < n; ++i) {
    LabeledSample& s = data[i];
    s.y = rng.sign();
    s.x.resize(spec.d + 1);
    s.x[0] = rng.normal(spec.beta * s.y, spec.sigma1);
    for (int j = 0; j < spec.d; ++j)
      s.x[j + 1] = rng.normal(0.0, std::sqrt(spec.sigma2_diag[j]));
  }
  return data;
}

inline double dot(const LinearModel& m, const VectorXd& x) {
  return m.w1 * x[0] + m.w2.dot(x.tail(x.size() - 1));
}

// Hinge at margin gamma: max(0, gamma - y<w,x>).
inline double margin_loss(const LinearModel& m, const LabeledSample& s,
                          double gamma) {
  return std::max(0.0, gamma - s.y * dot(m, s.x));
}

// Subgradient in x: -y*w strictly inside the margin, 0 on and beyond it.
inline VectorXd margin_subgradient_x(const LinearModel& m, const LabeledSample& s,
                                     double gamma) {
  if (s.y * dot(m, s.x) < gamma) return -static_cast<double>(s.y) * m.as_vector();
  return VectorXd::Zero(m.dim());
}

// x + alpha * subgradient; leaves on/beyond-margin points untouched.
inline VectorXd rcad_perturb_linear(const LinearModel& m, const LabeledSample& s,
                                    double alpha, double gamma) {
  if (!(alpha >= 0.0))
    throw std::invalid_argument("rcad_perturb_linear: alpha >= 0 required");
  return s.x + alpha * margin_subgradient_x(m, s, gamma);
}

// ---------------------------------------------------------------------------
// Finite-sample surrogate objective M_hat(w) and its exact gradient
// ---------------------------------------------------------------------------

// mean_i exp(-|<w, x_i + alpha * subgrad>|)
inline double finite_sample_objective(const LinearModel& m, const Dataset& data,
                                      double alpha, double gamma) {
  if (data.empty())
    throw std::invalid_argument("finite_sample_objective: empty dataset");
  const double wsq = m.w1 * m.w1 + m.w2.squaredNorm();
  double acc = 0.0;
  for (const auto& s : data) {
    const double logit = dot(m, s.x);
    const bool inside = s.y * logit < gamma;
    const double z = inside ? logit - alpha * s.y * wsq : logit;
    acc += std::exp(-std::abs(z));
  }
  return acc / static_cast<double>(data.size());
}

// Exact derivative, keeping the dependence through the perturbation
// (d/dw of -alpha*y*|w|^2 contributes -2*alpha*y*w). sign(0) := 0.
inline VectorXd finite_sample_grad(const LinearModel& m, const Dataset& data,
                                   double alpha, double gamma) {
  if (data.empty())
    throw std::invalid_argument("finite_sample_grad: empty dataset");
  const double wsq = m.w1 * m.w1 + m.w2.squaredNorm();
  const VectorXd w = m.as_vector();
  VectorXd g = VectorXd::Zero(m.dim());
  for (const auto& s : data) {
    const double logit = dot(m, s.x);
    const bool inside = s.y * logit < gamma;
    const double z = inside ? logit - alpha * s.y * wsq : logit;
    const double sgn = z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0);
    const double f = std::exp(-std::abs(z));
    VectorXd dz = s.x;
    if (inside) dz -= 2.0 * alpha * s.y * w;
    g -= sgn * f * dz;
  }
  return g / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Population objective: exact closed form
// ---------------------------------------------------------------------------
//
// Conditioned on y, the margin m = y<w,x> is N(mu, s2) with mu = beta*w1 and
// s2 = w' Sigma_tilde w. With A = alpha*|w|^2 the perturbed logit magnitude is
// |m - A*1{m < gamma}|, so
//   M(w) = E exp(-(A - m))  on m < min(A, gamma)
//        + E exp(-(m - A))  on min(A, gamma) <= m < gamma   (empty if A >= gamma)
//        + E exp(-m)        on m >= gamma,
// and each piece is a tilted Gaussian segment integral expressible in erfc.
// For A >= gamma this collapses to the two-term expression used by
// `population_objective`.

namespace detail {

struct Moments {
  double mu;  // beta * w1
  double s2;  // sigma_w^2
  double A;   // alpha * |w|^2
};

inline Moments moments(const LinearModel& m, const GaussianMixtureSpec& spec,
                       double alpha) {
  Moments out;
  out.mu = spec.beta * m.w1;
  out.s2 = spec.sigma1 * spec.sigma1 * m.w1 * m.w1 +
           (spec.sigma2_diag.array() * m.w2.array().square()).sum();
  out.A = alpha * (m.w1 * m.w1 + m.w2.squaredNorm());
  return out;
}

// Partials of the general closed form with respect to (mu, s2, A).
struct ThetaGrad {
  double value = 0.0;
  double dmu = 0.0;
  double ds2 = 0.0;
  double dA = 0.0;
};

inline ThetaGrad surrogate_theta(const Moments& mm, double gamma) {
  const double mu = mm.mu, s2 = mm.s2, A = mm.A;
  if (!(s2 > 0.0))
    throw std::invalid_argument("population surrogate: degenerate sigma_w");
  const double sig = std::sqrt(s2);
  const double inv = 1.0 / (sig * std::sqrt(2.0));
  const bool a_below = A < gamma;
  const double Amin = a_below ? A : gamma;
  const double dAmin_dA = a_below ? 1.0 : 0.0;

  ThetaGrad out;
  const double cg = 2.0 / std::sqrt(kPi);  // -d erfc(h)/dh = cg * exp(-h^2)

  // piece 1: 0.5*exp(g1)*erfc(h1), g1 = mu + s2/2 - A, h1 = (mu + s2 - Amin)*inv
  {
    const double g = mu + s2 / 2.0 - A;
    const double n = mu + s2 - Amin;
    const double h = n * inv;
    const double ef = 0.5 * exp_times_erfc(g, h);
    const double gauss = 0.5 * cg * std::exp(g - h * h);
    out.value += ef;
    // dg/d(mu,s2,A) = (1, 1/2, -1); dh/dmu = inv, dh/ds2 = inv - h/(2 s2),
    // dh/dA = -dAmin*inv
    out.dmu += ef * 1.0 - gauss * inv;
    out.ds2 += ef * 0.5 - gauss * (inv - h / (2.0 * s2));
    out.dA += ef * (-1.0) - gauss * (-dAmin_dA * inv);
  }
  // piece 2: 0.5*exp(g2)*(erfc(h2a) - erfc(h2b)), g2 = A - mu + s2/2,
  // h2a = (Amin - mu + s2)*inv, h2b = (gamma - mu + s2)*inv
  {
    const double g = A - mu + s2 / 2.0;
    const double na = Amin - mu + s2;
    const double nb = gamma - mu + s2;
    const double ha = na * inv;
    const double hb = nb * inv;
    const double efa = 0.5 * exp_times_erfc(g, ha);
    const double efb = 0.5 * exp_times_erfc(g, hb);
    const double ga = 0.5 * cg * std::exp(g - ha * ha);
    const double gb = 0.5 * cg * std::exp(g - hb * hb);
    out.value += efa - efb;
    out.dmu += (efa - efb) * (-1.0) - ga * (-inv) + gb * (-inv);
    out.ds2 += (efa - efb) * 0.5 - ga * (inv - ha / (2.0 * s2)) +
               gb * (inv - hb / (2.0 * s2));
    out.dA += (efa - efb) * 1.0 - ga * (dAmin_dA * inv);
  }
  // piece 3: 0.5*exp(g3)*erfc(h2b), g3 = -mu + s2/2
  {
    const double g = -mu + s2 / 2.0;
    const double nb = gamma - mu + s2;
    const double hb = nb * inv;
    const double ef = 0.5 * exp_times_erfc(g, hb);
    const double gauss = 0.5 * cg * std::exp(g - hb * hb);
    out.value += ef;
    out.dmu += ef * (-1.0) - gauss * (-inv);
    out.ds2 += ef * 0.5 - gauss * (inv - hb / (2.0 * s2));
  }
  return out;
}

}  // namespace detail

// General closed form, valid for any alpha >= 0 (not just alpha >= gamma) and
// any nonzero w. Drives the population-mode trainer.
inline double population_surrogate(const LinearModel& m,
                                   const GaussianMixtureSpec& spec, double alpha,
                                   double gamma) {
  return detail::surrogate_theta(detail::moments(m, spec, alpha), gamma).value;
}

inline VectorXd population_surrogate_grad(const LinearModel& m,
                                          const GaussianMixtureSpec& spec,
                                          double alpha, double gamma) {
  const auto mm = detail::moments(m, spec, alpha);
  const auto tg = detail::surrogate_theta(mm, gamma);
  const double s1sq = spec.sigma1 * spec.sigma1;
  VectorXd g(m.dim());
  g[0] = tg.dmu * spec.beta + tg.ds2 * 2.0 * s1sq * m.w1 + tg.dA * 2.0 * alpha * m.w1;
  g.tail(m.w2.size()) =
      tg.ds2 * 2.0 * (spec.sigma2_diag.array() * m.w2.array()).matrix() +
      tg.dA * 2.0 * alpha * m.w2;
  return g;
}

namespace detail {

inline void check_population_preconditions(const LinearModel& m,
                                           const GaussianMixtureSpec& spec,
                                           double alpha, double gamma,
                                           const char* who) {
  if (alpha < gamma)
    throw std::invalid_argument(std::string(who) +
                                ": requires alpha >= gamma (closed form regime)");
  if (std::abs(m.norm() - 1.0) > 1e-3)
    throw std::invalid_argument(std::string(who) + ": requires unit-norm w");
  if (!(sigma_w_of(m, spec) > 0.0))
    throw std::invalid_argument(std::string(who) + ": degenerate sigma_w");
}

}  // namespace detail

// Two-term closed form (alpha >= gamma, |w| = 1):
//   1/2 exp(beta*w1 - alpha*|w|^2 + sigma_w^2/2) erfc((sigma_w + a_w)/sqrt(2))
// + 1/2 exp(-beta*w1 + sigma_w^2/2)              erfc((sigma_w - a_w)/sqrt(2))
inline double population_objective(const LinearModel& m,
                                   const GaussianMixtureSpec& spec, double alpha,
                                   double gamma) {
  detail::check_population_preconditions(m, spec, alpha, gamma,
                                         "population_objective");
  const auto st = derived_stats(m, spec, gamma);
  const double sw = st.sigma_w, aw = st.a_w;
  const double s2 = sw * sw;
  const double wsq = m.w1 * m.w1 + m.w2.squaredNorm();
  const double r2 = std::sqrt(2.0);
  return 0.5 * exp_times_erfc(spec.beta * m.w1 - alpha * wsq + s2 / 2.0,
                              (sw + aw) / r2) +
         0.5 * exp_times_erfc(-spec.beta * m.w1 + s2 / 2.0, (sw - aw) / r2);
}

// Analytic gradient assembled from the dM/dw1 and grad_w2 M expressions.
inline VectorXd population_grad(const LinearModel& m,
                                const GaussianMixtureSpec& spec, double alpha,
                                double gamma) {
  detail::check_population_preconditions(m, spec, alpha, gamma, "population_grad");
  const auto st = derived_stats(m, spec, gamma);
  const double sw = st.sigma_w, aw = st.a_w;
  const double s2 = sw * sw;
  const double s1sq = spec.sigma1 * spec.sigma1;
  const double w1 = m.w1;
  const double beta = spec.beta;
  const double wsq = w1 * w1 + m.w2.squaredNorm();
  const double r2 = std::sqrt(2.0);
  const double r2pi = std::sqrt(2.0 / kPi);

  const double gp = beta * w1 + s2 / 2.0 - alpha * wsq;  // exponent, + branch
  const double gm = -beta * w1 + s2 / 2.0;               // exponent, - branch
  const double up = (sw + aw) / r2;
  const double um = (sw - aw) / r2;
  const double Ep_erfc = 0.5 * exp_times_erfc(gp, up);
  const double Em_erfc = 0.5 * exp_times_erfc(gm, um);
  const double Ep_gauss = 0.5 * r2pi * std::exp(gp - up * up);
  const double Em_gauss = 0.5 * r2pi * std::exp(gm - um * um);

  // d a_w/d w1 = (beta + (gamma - beta w1) w1 s1^2/s2)/sw,
  // d sigma_w/d w1 = w1 s1^2 / sw
  const double q = beta + (gamma - beta * w1) * (w1 * s1sq / s2);
  const double dw1 = (beta - 2.0 * alpha * w1 + w1 * s1sq) * Ep_erfc -
                     Ep_gauss * (q + w1 * s1sq) / sw +
                     (-beta + w1 * s1sq) * Em_erfc +
                     Em_gauss * (q - w1 * s1sq) / sw;

  // w2 block carries Sigma_2 w_2 throughout.
  const VectorXd Sw2 = (spec.sigma2_diag.array() * m.w2.array()).matrix();
  const double coef_p =
      -Ep_gauss / sw + Ep_gauss * aw / s2;  // from d sigma_w and d a_w
  const double coef_m = Em_erfc - Em_gauss * (1.0 / sw + aw / s2);
  VectorXd g(m.dim());
  g[0] = dw1;
  g.tail(m.w2.size()) =
      Ep_erfc * (Sw2 - 2.0 * alpha * m.w2) + coef_p * Sw2 + coef_m * Sw2;
  return g;
}

// Exact population 0-1 error: 1/2 erfc(beta*w1/(sqrt(2)*sigma_w)).
inline double population_test_error(const LinearModel& m,
                                    const GaussianMixtureSpec& spec) {
  const double sw = sigma_w_of(m, spec);
  if (sw == 0.0) {
    if (m.w1 == 0.0) return 0.5;
    return m.w1 > 0.0 ? 0.0 : 1.0;
  }
  return 0.5 * std::erfc(spec.beta * m.w1 / (std::sqrt(2.0) * sw));
}

inline LinearModel project_unit_sphere(const LinearModel& m) {
  const double n = m.norm();
  if (!(n > 0.0))
    throw std::invalid_argument("project_unit_sphere: zero vector");
  return LinearModel(m.w1 / n, m.w2 / n);
}

// ---------------------------------------------------------------------------
// Trainers
// ---------------------------------------------------------------------------

struct LinearIterate {
  int iter = 0;
  double objective = 0.0;      // mean margin loss (ERM) or surrogate M (RCAD)
  double train_accuracy = 0.0; // sign agreement on the training sample
  double test_accuracy = 0.0;  // exact population accuracy
  double w1_abs = 0.0;
  double w2_norm = 0.0;
};

struct LinearRun {
  LinearModel model;
  std::vector<LinearIterate> trajectory;
};

namespace detail {

inline double train_accuracy(const LinearModel& m, const Dataset& data) {
  int correct = 0;
  for (const auto& s : data)
    if (s.y * dot(m, s.x) > 0.0) ++correct;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

inline LinearIterate snapshot(int iter, double objective, const LinearModel& m,
                              const Dataset& data,
                              const GaussianMixtureSpec& spec) {
  LinearIterate it;
  it.iter = iter;
  it.objective = objective;
  it.train_accuracy = data.empty() ? 0.0 : train_accuracy(m, data);
  it.test_accuracy = 1.0 - population_test_error(m, spec);
  it.w1_abs = std::abs(m.w1);
  it.w2_norm = m.w2_norm();
  return it;
}

}  // namespace detail

// Projected subgradient descent on the mean margin loss, renormalizing to the
// unit sphere after every step. Initial direction is seed-controlled.
inline LinearRun erm_train_linear(const Dataset& data,
                                  const GaussianMixtureSpec& spec, double gamma,
                                  const AscentConfig& cfg, std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("erm_train_linear: empty dataset");
  const int dim = static_cast<int>(data.front().x.size());
  Rng rng = Rng(seed).derive(0x1e17);
  VectorXd w0(dim);
  for (int i = 0; i < dim; ++i) w0[i] = rng.normal();
  LinearModel w = project_unit_sphere(LinearModel::from_vector(w0));

  LinearRun run;
  run.trajectory.reserve(cfg.iters + 1);
  const double inv_n = 1.0 / static_cast<double>(data.size());
  double mean_loss = 0.0;
  for (const auto& s : data) mean_loss += margin_loss(w, s, gamma) * inv_n;
  run.trajectory.push_back(detail::snapshot(0, mean_loss, w, data, spec));

  for (int t = 1; t <= cfg.iters; ++t) {
    VectorXd grad = VectorXd::Zero(dim);
    for (const auto& s : data)
      if (s.y * dot(w, s.x) < gamma) grad -= s.y * s.x;
    grad *= inv_n;
    w = project_unit_sphere(
        LinearModel::from_vector(w.as_vector() - cfg.eta * grad));
    mean_loss = 0.0;
    for (const auto& s : data) mean_loss += margin_loss(w, s, gamma) * inv_n;
    run.trajectory.push_back(detail::snapshot(t, mean_loss, w, data, spec));
  }
  run.model = w;
  return run;
}

enum class AscentMode {
  kFiniteSample,  // ascend M_hat on the training sample
  kPopulation     // ascend the exact population surrogate (general closed form)
};

// Projected gradient ascent on the chosen surrogate objective, starting from
// `init` (normally the ERM solution). Every iterate is renormalized to unit
// norm. `data` supplies the finite-sample objective and the train-accuracy
// column; population mode only needs `spec`.
inline LinearRun rcad_train_linear(const LinearModel& init, const Dataset& data,
                                   const GaussianMixtureSpec& spec,
                                   const AscentConfig& cfg, double gamma,
                                   AscentMode mode) {
  if (std::abs(init.norm() - 1.0) > 1e-8)
    throw std::invalid_argument("rcad_train_linear: init must be unit-norm");
  if (mode == AscentMode::kFiniteSample && data.empty())
    throw std::invalid_argument("rcad_train_linear: finite-sample mode needs data");

  LinearModel w = init;
  auto objective = [&](const LinearModel& m) {
    return mode == AscentMode::kFiniteSample
               ? finite_sample_objective(m, data, cfg.alpha, gamma)
               : population_surrogate(m, spec, cfg.alpha, gamma);
  };

  LinearRun run;
  run.trajectory.reserve(cfg.iters + 1);
  run.trajectory.push_back(detail::snapshot(0, objective(w), w, data, spec));
  for (int t = 1; t <= cfg.iters; ++t) {
    const VectorXd g = mode == AscentMode::kFiniteSample
                           ? finite_sample_grad(w, data, cfg.alpha, gamma)
                           : population_surrogate_grad(w, spec, cfg.alpha, gamma);
    w = project_unit_sphere(
        LinearModel::from_vector(w.as_vector() + cfg.eta * g));
    run.trajectory.push_back(detail::snapshot(t, objective(w), w, data, spec));
  }
  run.model = w;
  return run;
}

}  // namespace rcad::linear
