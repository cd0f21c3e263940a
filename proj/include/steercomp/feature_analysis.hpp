#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steercomp/errors.hpp"
#include "steercomp/linalg.hpp"
#include "steercomp/metrics.hpp"
#include "steercomp/telemetry.hpp"

namespace steercomp {

/// Sample matrix: rows are frames, columns are named features. `means` is
/// populated by center_and_covariance.
struct FeatureMatrix {
  std::vector<std::string> names;
  Matrix data;
  Vector means;
};

/// Eigen-decomposition of a covariance matrix plus the feature ranking
/// derived from it. Eigenvalues are sorted descending and paired with
/// eigenvector columns; contribution_rates[i] = lambda_i / sum(lambda).
/// feature_scores is the loading-weighted per-feature contribution
/// sum_k Cr_k * v_ik^2 (itself a probability vector); `selected` holds the
/// top-k feature indices by that score.
struct PcaResult {
  Vector eigenvalues;
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
  Vector contribution_rates;
  Vector feature_scores;
  std::vector<std::size_t> selected;
};

/// Shift-and-RMSE scan between a command and a measured series.
struct DelayScan {
  Vector shifts;          // seconds
  Vector rmse_at_shift;   // same length
  double best_shift = 0.0;
  double best_rmse = 0.0;
  double rmse_at_zero = 0.0;
};

/// Per-partition RMSE split by |cmd| against an angle threshold. An empty
/// partition is reported as disengaged, never as 0.
struct SegmentRmse {
  std::optional<double> straight;
  std::optional<double> curve;
  double total = 0.0;
  std::size_t straight_count = 0;
  std::size_t curve_count = 0;
};

inline FeatureMatrix build_feature_matrix(const TelemetryLog& log,
                                          const std::vector<std::string>& feature_names) {
  if (log.size() < 2) throw InsufficientDataError("build_feature_matrix: need >= 2 frames");
  if (feature_names.empty()) throw ContractError("build_feature_matrix: no features requested");
  FeatureMatrix fm;
  fm.names = feature_names;
  fm.data = Matrix(log.size(), feature_names.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
      const double v = get_field(log.frames[i], feature_names[j]);  // throws SchemaError
      if (!std::isfinite(v)) {
        throw DataError("build_feature_matrix: non-finite value in " + feature_names[j] +
                        " at frame " + std::to_string(i));
      }
      fm.data(i, j) = v;
    }
  }
  return fm;
}

/// Centers each column to zero mean and returns the centered matrix with the
/// unbiased (1/(m-1)) covariance. Covariance is symmetric by construction.
inline std::pair<FeatureMatrix, Matrix> center_and_covariance(const FeatureMatrix& fm) {
  const std::size_t m = fm.data.rows();
  const std::size_t n = fm.data.cols();
  if (m < 2) throw InsufficientDataError("center_and_covariance: need >= 2 samples");

  FeatureMatrix centered;
  centered.names = fm.names;
  centered.data = fm.data;
  centered.means.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) mean += fm.data(i, j);
    mean /= static_cast<double>(m);
    centered.means[j] = mean;
    for (std::size_t i = 0; i < m; ++i) centered.data(i, j) -= mean;
  }

  Matrix cov(n, n);
  const double norm = 1.0 / static_cast<double>(m - 1);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < m; ++i) acc += centered.data(i, a) * centered.data(i, b);
      cov(a, b) = acc * norm;
      cov(b, a) = cov(a, b);
    }
  }
  return {std::move(centered), std::move(cov)};
}

/// Cyclic Jacobi eigen-decomposition for symmetric matrices. Converged when
/// the off-diagonal Frobenius norm drops below tol * ||A||_F; at most
/// max_sweeps full sweeps. Returns unsorted (eigenvalues, eigenvector
/// columns).
inline std::pair<Vector, Matrix> jacobi_eigen_symmetric(Matrix a, double tol = 1e-12,
                                                        int max_sweeps = 100) {
  const std::size_t n = a.rows();
  if (n == 0 || a.cols() != n) throw ContractError("jacobi: matrix must be square");

  double norm_a = 0.0;
  for (double v : a.data()) norm_a += v * v;
  norm_a = std::sqrt(norm_a);

  Matrix v = Matrix::identity(n);
  auto off_norm = [&] {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) acc += a(i, j) * a(i, j);
    return std::sqrt(acc);
  };

  for (int sweep = 0; sweep < max_sweeps && off_norm() > tol * norm_a; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  Vector evals(n);
  for (std::size_t i = 0; i < n; ++i) evals[i] = a(i, i);
  return {std::move(evals), std::move(v)};
}

/// PCA of a covariance matrix: Jacobi spectrum sorted descending,
/// contribution rates, loading-weighted feature scores and top_k selection.
inline PcaResult pca(const Matrix& cov, std::size_t top_k) {
  const std::size_t n = cov.rows();
  if (n == 0 || cov.cols() != n) throw ContractError("pca: covariance must be square");
  if (top_k < 1 || top_k > n) throw ContractError("pca: top_k out of range");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-9) {
        throw ContractError("pca: covariance is not symmetric");
      }
    }
  }
  double frob = 0.0;
  for (double v : cov.data()) frob += v * v;
  if (frob == 0.0) throw DegenerateSpectrumError("pca: all-zero covariance");

  auto [evals, evecs] = jacobi_eigen_symmetric(cov);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return evals[a] > evals[b]; });

  PcaResult result;
  result.eigenvalues.resize(n);
  result.eigenvectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    result.eigenvalues[k] = std::max(evals[order[k]], 0.0);  // clamp tiny negatives
    for (std::size_t i = 0; i < n; ++i) result.eigenvectors(i, k) = evecs(i, order[k]);
  }

  const double total = std::accumulate(result.eigenvalues.begin(), result.eigenvalues.end(), 0.0);
  if (total <= 0.0) throw DegenerateSpectrumError("pca: eigenvalue sum is zero");
  result.contribution_rates.resize(n);
  for (std::size_t k = 0; k < n; ++k) result.contribution_rates[k] = result.eigenvalues[k] / total;

  result.feature_scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double score = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double loading = result.eigenvectors(i, k);
      score += result.contribution_rates[k] * loading * loading;
    }
    result.feature_scores[i] = score;
  }

  std::vector<std::size_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0);
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return result.feature_scores[a] > result.feature_scores[b];
  });
  result.selected.assign(rank.begin(), rank.begin() + static_cast<std::ptrdiff_t>(top_k));
  return result;
}

/// Scans shifts {0, step, ..., max_shift}: at each shift the command is
/// delayed by that amount and compared with the measurement over the
/// overlapping window only (no padding). best_shift is the argmin, smallest
/// shift on ties.
inline DelayScan estimate_delay(std::span<const double> cmd, std::span<const double> meas,
                                double max_shift, double step, double sample_period) {
  if (cmd.size() != meas.size()) throw ContractError("estimate_delay: length mismatch");
  if (!(sample_period > 0.0)) throw ContractError("estimate_delay: sample_period must be positive");
  if (!(step > 0.0)) throw ContractError("estimate_delay: step must be positive");
  if (max_shift < 0.0) throw ContractError("estimate_delay: max_shift must be non-negative");

  const double step_ratio = step / sample_period;
  const auto step_samples = static_cast<std::size_t>(std::llround(step_ratio));
  if (step_samples < 1 || std::abs(step_ratio - static_cast<double>(step_samples)) > 1e-6) {
    throw ContractError("estimate_delay: step must be an integer multiple of sample_period");
  }
  const auto max_samples = static_cast<std::size_t>(std::floor(max_shift / sample_period + 1e-9));
  if (cmd.size() < 2 * max_samples || cmd.size() < 2) {
    throw InsufficientDataError("estimate_delay: series too short for requested max_shift");
  }

  DelayScan scan;
  std::size_t best_index = 0;
  for (std::size_t k = 0; k <= max_samples; k += step_samples) {
    double acc = 0.0;
    const std::size_t count = cmd.size() - k;
    for (std::size_t i = k; i < cmd.size(); ++i) {
      const double d = cmd[i - k] - meas[i];
      acc += d * d;
    }
    const double value = std::sqrt(acc / static_cast<double>(count));
    scan.shifts.push_back(static_cast<double>(k) * sample_period);
    scan.rmse_at_shift.push_back(value);
    if (value < scan.rmse_at_shift[best_index]) best_index = scan.rmse_at_shift.size() - 1;
  }
  scan.best_shift = scan.shifts[best_index];
  scan.best_rmse = scan.rmse_at_shift[best_index];
  scan.rmse_at_zero = scan.rmse_at_shift.front();
  return scan;
}

/// Splits samples into straight (|cmd| <= threshold) and curve partitions
/// and reports per-partition and total RMSE between cmd and meas.
inline SegmentRmse segment_rmse(std::span<const double> cmd, std::span<const double> meas,
                                double angle_threshold = 0.2) {
  if (cmd.size() != meas.size()) throw ContractError("segment_rmse: length mismatch");
  if (cmd.empty()) throw InsufficientDataError("segment_rmse: empty series");
  if (!(angle_threshold > 0.0)) throw ContractError("segment_rmse: threshold must be positive");

  SegmentRmse out;
  double acc_s = 0.0, acc_c = 0.0, acc_t = 0.0;
  for (std::size_t i = 0; i < cmd.size(); ++i) {
    const double d = cmd[i] - meas[i];
    const double sq = d * d;
    acc_t += sq;
    if (std::abs(cmd[i]) <= angle_threshold) {
      acc_s += sq;
      ++out.straight_count;
    } else {
      acc_c += sq;
      ++out.curve_count;
    }
  }
  out.total = std::sqrt(acc_t / static_cast<double>(cmd.size()));
  if (out.straight_count > 0) out.straight = std::sqrt(acc_s / static_cast<double>(out.straight_count));
  if (out.curve_count > 0) out.curve = std::sqrt(acc_c / static_cast<double>(out.curve_count));
  return out;
}

}  // namespace steercomp
