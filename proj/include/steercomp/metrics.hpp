#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "steercomp/errors.hpp"

namespace steercomp {

/// Scalar evaluation bundle. rmse/cc/ce come from predictor evaluation,
/// max_tracking_error and oscillation_index from closed-loop logs; unused
/// fields stay disengaged.
struct MetricsReport {
  double rmse = 0.0;
  std::string unit;  // "rad" or "m"
  std::optional<double> cc;
  std::optional<double> ce;
  std::optional<double> max_tracking_error;  // m
  std::optional<double> oscillation_index;   // rad, RMS of first difference
  std::size_t oscillation_zero_crossings = 0;
  std::size_t sample_count = 0;
};

inline double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("rmse: length mismatch");
  if (a.empty()) throw InsufficientDataError("rmse: empty series");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.size()));
}

/// Pearson correlation coefficient between a measured and a predicted
/// series. Throws UndefinedMetricError when either series is constant.
inline double cc(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size()) throw ContractError("cc: length mismatch");
  if (measured.size() < 2) throw InsufficientDataError("cc: need at least 2 samples");
  const auto n = static_cast<double>(measured.size());
  double mean_m = 0.0, mean_p = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    mean_m += measured[i];
    mean_p += predicted[i];
  }
  mean_m /= n;
  mean_p /= n;
  double num = 0.0, den_m = 0.0, den_p = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double dm = measured[i] - mean_m;
    const double dp = predicted[i] - mean_p;
    num += dm * dp;
    den_m += dm * dm;
    den_p += dp * dp;
  }
  if (den_m <= 0.0 || den_p <= 0.0) {
    throw UndefinedMetricError("cc: constant series has no correlation");
  }
  return num / (std::sqrt(den_p) * std::sqrt(den_m));
}

/// Nash-Sutcliffe coefficient of efficiency: 1 at perfect prediction, 0 when
/// the predictor is no better than the measured mean, negative when worse.
inline double ce(std::span<const double> measured, std::span<const double> predicted) {
  if (measured.size() != predicted.size()) throw ContractError("ce: length mismatch");
  if (measured.size() < 2) throw InsufficientDataError("ce: need at least 2 samples");
  const auto n = static_cast<double>(measured.size());
  double mean_m = 0.0;
  for (double v : measured) mean_m += v;
  mean_m /= n;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    const double e = predicted[i] - measured[i];
    const double d = measured[i] - mean_m;
    num += e * e;
    den += d * d;
  }
  if (den <= 0.0) throw UndefinedMetricError("ce: constant measured series");
  return 1.0 - num / den;
}

/// RMS of the first difference of a steering-wheel angle series, plus the
/// count of sign changes of that difference (reported for transparency).
inline std::pair<double, std::size_t> oscillation_index(std::span<const double> theta) {
  if (theta.size() < 2) throw InsufficientDataError("oscillation_index: need at least 2 samples");
  double acc = 0.0;
  std::size_t crossings = 0;
  double prev_diff = 0.0;
  bool have_prev = false;
  for (std::size_t i = 1; i < theta.size(); ++i) {
    const double d = theta[i] - theta[i - 1];
    acc += d * d;
    if (have_prev && d != 0.0 && prev_diff != 0.0 && std::signbit(d) != std::signbit(prev_diff)) {
      ++crossings;
    }
    if (d != 0.0) {
      prev_diff = d;
      have_prev = true;
    }
  }
  return {std::sqrt(acc / static_cast<double>(theta.size() - 1)), crossings};
}

/// Tracking metrics from per-step lateral error and measured wheel angle.
inline MetricsReport tracking_metrics(std::span<const double> lateral_error,
                                      std::span<const double> steer_wheel_meas) {
  if (lateral_error.size() != steer_wheel_meas.size()) {
    throw ContractError("tracking_metrics: length mismatch");
  }
  if (lateral_error.size() < 2) {
    throw InsufficientDataError("tracking_metrics: log too short");
  }
  MetricsReport report;
  report.sample_count = lateral_error.size();
  report.unit = "m";
  double max_err = 0.0;
  double acc = 0.0;
  for (double e : lateral_error) {
    max_err = std::max(max_err, std::abs(e));
    acc += e * e;
  }
  report.rmse = std::sqrt(acc / static_cast<double>(lateral_error.size()));
  report.max_tracking_error = max_err;
  auto [osc, crossings] = oscillation_index(steer_wheel_meas);
  report.oscillation_index = osc;
  report.oscillation_zero_crossings = crossings;
  return report;
}

/// Relative improvement of run B over run A: (A - B) / A.
inline double improvement(double baseline, double optimized) {
  if (baseline == 0.0) throw UndefinedMetricError("improvement: zero baseline");
  return (baseline - optimized) / baseline;
}

}  // namespace steercomp
