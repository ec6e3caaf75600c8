#pragma once
// Data generation and ingestion: the high-dimensional two-moons generator, a
// CSV pipeline with train-only standardization and splitting, and the
// synthetic heteroscedastic regression fixture.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rcad/micro_nn.hpp"
#include "rcad/rng.hpp"

namespace rcad::data {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nn::Batch;

// ---------------------------------------------------------------------------
// Two moons, embedded in d dimensions
// ---------------------------------------------------------------------------
//
// Base geometry: class 0 on the upper half-circle (cos t, sin t), class 1 on
// the mirrored half-circle (1 - cos t, 1/2 - sin t), t in [0, pi]. The two
// arcs interlock and are linearly inseparable in 2-D. Samples get d-2 zero
// coordinates appended and N(0, sigma^2 I_d) noise added to every coordinate.

struct MoonsSpec {
  int n = 20000;
  int d = 625;
  double sigma = 0.1;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("MoonsSpec: n >= 1");
    if (d < 2) throw std::invalid_argument("MoonsSpec: d >= 2");
    if (!(sigma >= 0.0)) throw std::invalid_argument("MoonsSpec: sigma >= 0");
  }
};

inline void moon_point(int cls, double t, double& x, double& y) {
  if (cls == 0) {
    x = std::cos(t);
    y = std::sin(t);
  } else {
    x = 1.0 - std::cos(t);
    y = 0.5 - std::sin(t);
  }
}

inline Batch make_moons_highdim(const MoonsSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Batch b;
  b.inputs = MatrixXd::Zero(spec.n, spec.d);
  b.labels.resize(spec.n);
  for (int i = 0; i < spec.n; ++i) {
    const int cls = i % 2;  // exactly balanced
    const double t = rng.uniform(0.0, kPi);
    double x, y;
    moon_point(cls, t, x, y);
    b.labels[i] = cls;
    b.inputs(i, 0) = x;
    b.inputs(i, 1) = y;
    if (spec.sigma > 0.0)
      for (int j = 0; j < spec.d; ++j)
        b.inputs(i, j) += rng.normal(0.0, spec.sigma);
  }
  return b;
}

// Classifies a 2-D point by the nearer arc; 100% on noiseless base points.
inline int nearest_arc_class(double x, double y, int grid = 512) {
  double best0 = 1e300, best1 = 1e300;
  for (int i = 0; i <= grid; ++i) {
    const double t = kPi * i / grid;
    double ax, ay;
    moon_point(0, t, ax, ay);
    best0 = std::min(best0, (ax - x) * (ax - x) + (ay - y) * (ay - y));
    moon_point(1, t, ax, ay);
    best1 = std::min(best1, (ax - x) * (ax - x) + (ay - y) * (ay - y));
  }
  return best1 < best0 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

// Per-column statistics computed on the training split only. Constant columns
// (std = 0) are recorded as such and left unscaled.
struct ColumnStats {
  VectorXd mean;
  VectorXd std;

  static ColumnStats fit(const MatrixXd& X) {
    ColumnStats s;
    s.mean = X.colwise().mean();
    s.std.resize(X.cols());
    for (int j = 0; j < X.cols(); ++j) {
      const double var =
          (X.col(j).array() - s.mean[j]).square().sum() / X.rows();
      s.std[j] = std::sqrt(var);
    }
    return s;
  }

  MatrixXd apply(const MatrixXd& X) const {
    MatrixXd out = X;
    for (int j = 0; j < X.cols(); ++j) {
      out.col(j).array() -= mean[j];
      if (std[j] > 0.0) out.col(j) /= std[j];
    }
    return out;
  }
};

// ---------------------------------------------------------------------------
// Tabular regression data
// ---------------------------------------------------------------------------

struct SplitSpec {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(train > 0.0 && val >= 0.0 && test > 0.0))
      throw std::invalid_argument("SplitSpec: fractions must be positive");
    if (std::abs(train + val + test - 1.0) > 1e-9)
      throw std::invalid_argument("SplitSpec: fractions must sum to 1");
  }
};

struct TabularDataset {
  MatrixXd X;   // standardized features
  VectorXd y;   // standardized targets
  ColumnStats feature_stats;
  double target_mean = 0.0;
  double target_std = 1.0;  // 1 if the target column is constant

  // NLL values are reported in standardized target units; this maps a
  // standardized prediction back to raw units.
  double destandardize_target(double v) const {
    return v * target_std + target_mean;
  }
};

struct RegressionSplits {
  TabularDataset train, val, test;
};

namespace detail {

inline RegressionSplits split_and_standardize(const MatrixXd& X,
                                              const VectorXd& y,
                                              const SplitSpec& split) {
  split.validate();
  const int n = static_cast<int>(X.rows());
  Rng rng = Rng(split.seed).derive(0x5b1f);
  const std::vector<std::size_t> perm = rng.permutation(n);
  const int n_train = static_cast<int>(std::floor(split.train * n));
  const int n_val = static_cast<int>(std::floor(split.val * n));
  const int n_test = n - n_train - n_val;
  if (n_train < 1 || n_test < 1)
    throw std::invalid_argument("split: train and test splits must be nonempty");

  auto gather = [&](int begin, int count) {
    MatrixXd Xs(count, X.cols());
    VectorXd ys(count);
    for (int i = 0; i < count; ++i) {
      Xs.row(i) = X.row(perm[begin + i]);
      ys[i] = y[perm[begin + i]];
    }
    return std::pair<MatrixXd, VectorXd>(std::move(Xs), std::move(ys));
  };

  auto [Xtr, ytr] = gather(0, n_train);
  auto [Xva, yva] = gather(n_train, n_val);
  auto [Xte, yte] = gather(n_train + n_val, n_test);

  const ColumnStats fs = ColumnStats::fit(Xtr);
  const double ymean = ytr.mean();
  const double yvar = (ytr.array() - ymean).square().sum() / ytr.size();
  const double ystd = std::sqrt(yvar) > 0.0 ? std::sqrt(yvar) : 1.0;

  auto pack = [&](MatrixXd Xs, VectorXd ys) {
    TabularDataset d;
    d.X = fs.apply(Xs);
    d.y = (ys.array() - ymean) / ystd;
    d.feature_stats = fs;
    d.target_mean = ymean;
    d.target_std = ystd;
    return d;
  };

  RegressionSplits out;
  out.train = pack(std::move(Xtr), std::move(ytr));
  out.val = pack(std::move(Xva), std::move(yva));
  out.test = pack(std::move(Xte), std::move(yte));
  return out;
}

}  // namespace detail

// CSV: header row required, comma-separated, decimal point, numeric columns.
// Distinct diagnostics for a missing file, a missing target column, and any
// non-numeric cell.
inline RegressionSplits load_csv_regression(const std::string& path,
                                            const std::string& target_column,
                                            const SplitSpec& split) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv_regression: cannot open " + path);

  auto split_line = [](const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
  };

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("load_csv_regression: empty file " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  int target_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target_column) target_idx = static_cast<int>(j);
  if (target_idx < 0)
    throw std::runtime_error("load_csv_regression: target column '" +
                             target_column + "' not found in " + path);

  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw std::runtime_error("load_csv_regression: row " +
                               std::to_string(lineno) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) {
      try {
        std::size_t used = 0;
        vals[j] = std::stod(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw std::runtime_error("load_csv_regression: non-numeric cell '" +
                                 cells[j] + "' at row " + std::to_string(lineno) +
                                 ", column '" + header[j] + "'");
      }
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty())
    throw std::runtime_error("load_csv_regression: no data rows in " + path);

  const int n = static_cast<int>(rows.size());
  const int p = static_cast<int>(header.size()) - 1;
  MatrixXd X(n, p);
  VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    int col = 0;
    for (int j = 0; j < static_cast<int>(header.size()); ++j) {
      if (j == target_idx)
        y[i] = rows[i][j];
      else
        X(i, col++) = rows[i][j];
    }
  }
  return detail::split_and_standardize(X, y, split);
}

// ---------------------------------------------------------------------------
// Synthetic heteroscedastic regression fixture
// ---------------------------------------------------------------------------
//
// x ~ U[-1,1]^4, y = sin(pi*x1) + 0.5*x2 + s(x1)*eps with
// s(x1) = 0.1 + 0.5*sigmoid(3*x1): the noise level itself depends on x1, so a
// well-calibrated Gaussian head must learn an input-dependent variance.

struct SyntheticRegression {
  MatrixXd X;
  VectorXd y;
};

inline SyntheticRegression make_heteroscedastic(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("make_heteroscedastic: n >= 1");
  Rng rng(seed);
  SyntheticRegression out;
  out.X.resize(n, 4);
  out.y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 4; ++j) out.X(i, j) = rng.uniform(-1.0, 1.0);
    const double x1 = out.X(i, 0);
    const double mean = std::sin(kPi * x1) + 0.5 * out.X(i, 1);
    const double sd = 0.1 + 0.5 * sigmoid(3.0 * x1);
    out.y[i] = mean + sd * rng.normal();
  }
  return out;
}

// In-memory variant of the CSV pipeline, for the synthetic fixture.
inline RegressionSplits split_regression(const MatrixXd& X, const VectorXd& y,
                                         const SplitSpec& split) {
  if (X.rows() != y.size())
    throw std::invalid_argument("split_regression: X/y row mismatch");
  return detail::split_and_standardize(X, y, split);
}

}  // namespace rcad::data
