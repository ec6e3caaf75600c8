#pragma once
// erfc family, Gaussian tail helpers and entropy functions.
// All entropies are in nats.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace rcad {

inline constexpr double kPi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct Probability {
  double value;
  explicit Probability(double v) : value(v) {
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("Probability: value must lie in [0,1]");
  }
};

struct CategoricalDist {
  std::vector<double> probs;

  explicit CategoricalDist(std::vector<double> p) : probs(std::move(p)) {
    if (probs.empty())
      throw std::invalid_argument("CategoricalDist: needs at least one class");
    double sum = 0.0;
    for (double v : probs) {
      if (!(v >= 0.0))
        throw std::invalid_argument("CategoricalDist: negative probability");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("CategoricalDist: probabilities must sum to 1");
  }
};

struct GaussianDist {
  double mean;
  double variance;
  GaussianDist(double m, double v) : mean(m), variance(v) {
    if (!(v > 0.0))
      throw std::invalid_argument("GaussianDist: variance must be positive");
  }
};

// ---------------------------------------------------------------------------
// erfc family
// ---------------------------------------------------------------------------

inline double erfc(double x) { return std::erfc(x); }

// Scaled complement exp(x^2)*erfc(x) for x >= 0; avoids underflow of
// exp(a)*erfc(b) products. Continued fraction (A&S 7.1.14) for large x.
inline double erfcx(double x) {
  if (x < 0.0) throw std::invalid_argument("erfcx: requires x >= 0");
  if (x < 4.0) return std::exp(x * x) * std::erfc(x);
  // sqrt(pi)*exp(x^2)*erfc(x) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
  double cf = 0.0;
  for (int k = 60; k >= 1; --k) cf = (0.5 * k) / (x + cf);
  return 1.0 / ((x + cf) * std::sqrt(kPi));
}

// exp(a)*erfc(b), evaluated through erfcx when erfc(b) would underflow.
inline double exp_times_erfc(double a, double b) {
  if (b > 4.0) return erfcx(b) * std::exp(a - b * b);
  return std::exp(a) * std::erfc(b);
}

// Inverse on (0,2): safeguarded bisection then Newton polish.
inline double erfc_inv(double p) {
  if (!(p > 0.0 && p < 2.0))
    throw std::domain_error("erfc_inv: argument must lie in (0,2)");
  if (p == 1.0) return 0.0;
  double lo = -28.0, hi = 28.0;  // erfc spans (2 - 4e-343, 4e-343) here
  for (int i = 0; i < 90; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid) > p)
      lo = mid;
    else
      hi = mid;
  }
  double z = 0.5 * (lo + hi);
  // erfc'(z) = -2/sqrt(pi) * exp(-z^2)
  for (int i = 0; i < 3; ++i) {
    const double f = std::erfc(z) - p;
    const double df = -2.0 / std::sqrt(kPi) * std::exp(-z * z);
    const double step = f / df;
    if (!std::isfinite(step)) break;
    z -= step;
  }
  return z;
}

// Tail bounds for erfc(x/sqrt(2)), x >= 0:
//   lower: 2*sqrt(2/pi)*exp(-x^2/2)/(x + sqrt(x^2+4))
//   upper: sqrt(2/pi)*exp(-x^2/2)/x          (+inf at x = 0)
struct ErfcBounds {
  double lower;
  double upper;
};

inline ErfcBounds erfc_bounds(double x) {
  if (!(x >= 0.0)) throw std::domain_error("erfc_bounds: requires x >= 0");
  const double c = std::sqrt(2.0 / kPi) * std::exp(-0.5 * x * x);
  ErfcBounds b;
  b.lower = 2.0 * c / (x + std::sqrt(x * x + 4.0));
  b.upper = x > 0.0 ? c / x : std::numeric_limits<double>::infinity();
  return b;
}

// ---------------------------------------------------------------------------
// Entropies (nats)
// ---------------------------------------------------------------------------

// -sum p log p with 0 log 0 := 0.
inline double categorical_entropy(const CategoricalDist& d) {
  double h = 0.0;
  for (double p : d.probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

// Differential entropy of N(mean, variance): 0.5*log(2*pi*e*variance).
inline double gaussian_entropy(const GaussianDist& d) {
  return 0.5 * std::log(2.0 * kPi * std::exp(1.0) * d.variance);
}

inline double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

inline double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Entropy of Bern(p).
inline double binary_entropy(Probability p) {
  double h = 0.0;
  if (p.value > 0.0) h -= p.value * std::log(p.value);
  if (p.value < 1.0) h -= (1.0 - p.value) * std::log(1.0 - p.value);
  return h;
}

// Exact H_bin(sigmoid(z)), stable for large |z|:
// H = p*softplus(-z) + (1-p)*softplus(z) with p = sigmoid(z).
inline double binary_entropy_from_logit(double z) {
  const double p = sigmoid(z);
  return p * softplus(-z) + (1.0 - p) * softplus(z);
}

// Tail surrogate exp(-|z|) standing in for H_bin(sigmoid(z)).
inline double binary_entropy_surrogate(double z) { return std::exp(-std::abs(z)); }

}  // namespace rcad
