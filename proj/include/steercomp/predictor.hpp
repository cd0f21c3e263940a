#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "steercomp/errors.hpp"
#include "steercomp/linalg.hpp"
#include "steercomp/metrics.hpp"
#include "steercomp/rng.hpp"
#include "steercomp/telemetry.hpp"

namespace steercomp {

/// Scaled-sigmoid activation 2/(1+e^(-2x)) - 1. Saturates cleanly to +/-1
/// for large |x| (the exp overflows to inf, never to NaN).
inline double tansig(double x) { return 2.0 / (1.0 + std::exp(-2.0 * x)) - 1.0; }

/// Tapped-delay-line network shape and training hyper-parameters. taps = 1
/// degenerates to the plain feedforward (no-memory) baseline.
struct TdnnConfig {
  std::size_t taps = 5;
  double tap_spacing = 0.05;       // seconds; equals the log sample period
  std::size_t horizon_steps = 4;   // prediction lead in samples
  std::size_t feature_count = 3;
  std::vector<std::size_t> hidden = {8, 6};
  double learning_rate = 1e-3;
  std::size_t epochs = 500;
  std::uint64_t seed = 1;

  std::size_t input_dim() const { return taps * feature_count; }
};

/// Mini-batch size for gradient descent. Fixed rather than configurable so
/// that model files stay reproducible from the config line alone.
inline constexpr std::size_t kTdnnBatchSize = 32;

/// Floor applied to z-score scales so constant features normalize to 0.
inline constexpr double kNormScaleFloor = 1e-8;

struct NormStat {
  double mean = 0.0;
  double scale = 1.0;
};

/// Trained network: per-layer weight matrices (out x in) and biases, plus
/// the z-score statistics frozen from the training split.
struct TdnnModel {
  TdnnConfig config;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
  std::vector<NormStat> input_norm;  // one entry per feature
  NormStat target_norm;
};

struct TrainingReport {
  double final_loss = 0.0;
  Vector loss_curve;  // accumulated batch loss per epoch
  double train_cc = 0.0, train_ce = 0.0;
  double holdout_cc = 0.0, holdout_ce = 0.0;
  bool converged = true;
};

/// Supervised dataset assembled from a telemetry log: each row is the
/// frame-major concatenation [x(t), x(t-1), ..., x(t-(m-1))], the target is
/// steer_cmd - steer_meas at t + horizon. Inputs and targets are stored
/// z-scored with statistics taken from the chronological 80% train split.
struct Dataset {
  Matrix inputs;       // normalized
  Vector targets;      // normalized
  Vector raw_targets;  // original units (rad)
  std::size_t train_count = 0;
  std::size_t feature_count = 0;
  std::size_t taps = 0;
  std::vector<NormStat> input_norm;
  NormStat target_norm;

  std::size_t size() const { return targets.size(); }
  std::size_t holdout_count() const { return size() - train_count; }
};

inline Dataset assemble_dataset(const TelemetryLog& log,
                                const std::vector<std::string>& features,
                                const TdnnConfig& config) {
  if (features.size() != config.feature_count) {
    throw ContractError("assemble_dataset: feature list does not match config.feature_count");
  }
  if (config.taps < 1) throw ContractError("assemble_dataset: taps must be >= 1");
  const std::size_t m = config.taps;
  const std::size_t h = config.horizon_steps;
  const std::size_t f_count = features.size();
  if (log.size() <= m + h) {
    throw InsufficientDataError("assemble_dataset: log too short for taps + horizon");
  }
  const std::size_t count = log.size() - (m - 1) - h;

  Dataset ds;
  ds.feature_count = f_count;
  ds.taps = m;
  ds.inputs = Matrix(count, m * f_count);
  ds.targets.resize(count);
  ds.raw_targets.resize(count);

  for (std::size_t r = 0; r < count; ++r) {
    const std::size_t t = r + (m - 1);
    for (std::size_t k = 0; k < m; ++k) {
      const TelemetryFrame& frame = log.frames[t - k];
      for (std::size_t f = 0; f < f_count; ++f) {
        ds.inputs(r, k * f_count + f) = get_field(frame, features[f]);
      }
    }
    const TelemetryFrame& future = log.frames[t + h];
    ds.raw_targets[r] = future.steer_cmd - future.steer_meas;
  }

  ds.train_count = std::clamp<std::size_t>(count * 8 / 10, 1, count > 1 ? count - 1 : 1);

  // z-score statistics over the train split, pooled across taps per feature
  ds.input_norm.assign(f_count, {});
  for (std::size_t f = 0; f < f_count; ++f) {
    double mean = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < ds.train_count; ++r)
      for (std::size_t k = 0; k < m; ++k) {
        mean += ds.inputs(r, k * f_count + f);
        ++n;
      }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < ds.train_count; ++r)
      for (std::size_t k = 0; k < m; ++k) {
        const double d = ds.inputs(r, k * f_count + f) - mean;
        var += d * d;
      }
    var /= static_cast<double>(n);
    ds.input_norm[f] = {mean, std::max(std::sqrt(var), kNormScaleFloor)};
  }
  {
    double mean = 0.0;
    for (std::size_t r = 0; r < ds.train_count; ++r) mean += ds.raw_targets[r];
    mean /= static_cast<double>(ds.train_count);
    double var = 0.0;
    for (std::size_t r = 0; r < ds.train_count; ++r) {
      const double d = ds.raw_targets[r] - mean;
      var += d * d;
    }
    var /= static_cast<double>(ds.train_count);
    ds.target_norm = {mean, std::max(std::sqrt(var), kNormScaleFloor)};
  }

  for (std::size_t r = 0; r < count; ++r) {
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t f = 0; f < f_count; ++f) {
        const auto j = k * f_count + f;
        ds.inputs(r, j) = (ds.inputs(r, j) - ds.input_norm[f].mean) / ds.input_norm[f].scale;
      }
    ds.targets[r] = (ds.raw_targets[r] - ds.target_norm.mean) / ds.target_norm.scale;
  }
  return ds;
}

/// Normalizes a raw frame-major input window with the model's statistics.
inline Vector normalize_input(const TdnnModel& model, std::span<const double> raw) {
  if (raw.size() != model.config.input_dim()) {
    throw ContractError("normalize_input: dimension mismatch");
  }
  Vector out(raw.size());
  const std::size_t f_count = model.config.feature_count;
  for (std::size_t j = 0; j < raw.size(); ++j) {
    const NormStat& ns = model.input_norm[j % f_count];
    out[j] = (raw[j] - ns.mean) / ns.scale;
  }
  return out;
}

inline double denormalize_target(const TdnnModel& model, double normalized) {
  return normalized * model.target_norm.scale + model.target_norm.mean;
}

namespace detail {

/// Forward pass in normalized space; returns the raw (normalized) network
/// output and fills per-layer activations when a workspace is supplied.
inline double forward_normalized(const TdnnModel& model, std::span<const double> input,
                                 std::vector<Vector>* activations = nullptr) {
  const std::size_t layers = model.weights.size();
  Vector current(input.begin(), input.end());
  if (activations) {
    activations->resize(layers + 1);
    (*activations)[0] = current;
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const Matrix& w = model.weights[l];
    Vector next(w.rows());
    for (std::size_t i = 0; i < w.rows(); ++i) {
      const double* wr = w.row(i);
      double acc = model.biases[l][i];
      for (std::size_t j = 0; j < w.cols(); ++j) acc += wr[j] * current[j];
      next[i] = (l + 1 < layers) ? tansig(acc) : acc;
    }
    current = std::move(next);
    if (activations) (*activations)[l + 1] = current;
  }
  return current[0];
}

}  // namespace detail

/// Forward pass: normalized input in, de-normalized predicted error out.
inline double forward(const TdnnModel& model, std::span<const double> normalized_input) {
  if (normalized_input.size() != model.config.input_dim()) {
    throw ContractError("forward: input dimension mismatch");
  }
  return denormalize_target(model, detail::forward_normalized(model, normalized_input));
}

/// Convenience: raw feature window in, predicted error (rad) out.
inline double predict(const TdnnModel& model, std::span<const double> raw_window) {
  const Vector normalized = normalize_input(model, raw_window);
  return forward(model, normalized);
}

/// Fresh model with Glorot-uniform weights from a xoshiro256** stream seeded
/// by config.seed; biases start at zero.
inline TdnnModel initialize_model(const TdnnConfig& config) {
  if (config.taps < 1 || config.feature_count < 1) {
    throw ContractError("initialize_model: taps and feature_count must be >= 1");
  }
  for (std::size_t wdt : config.hidden) {
    if (wdt < 1) throw ContractError("initialize_model: hidden widths must be >= 1");
  }
  if (!(config.learning_rate > 0.0)) {
    throw ContractError("initialize_model: learning rate must be positive");
  }
  TdnnModel model;
  model.config = config;
  std::vector<std::size_t> dims;
  dims.push_back(config.input_dim());
  for (std::size_t wdt : config.hidden) dims.push_back(wdt);
  dims.push_back(1);

  Xoshiro256ss rng(config.seed);
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const std::size_t fan_in = dims[l];
    const std::size_t fan_out = dims[l + 1];
    const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (double& value : w.data()) value = rng.uniform(-r, r);
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(fan_out, 0.0);
  }
  model.input_norm.assign(config.feature_count, {});
  return model;
}

namespace detail {

struct GradientBuffers {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  explicit GradientBuffers(const TdnnModel& model) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      weights.emplace_back(model.weights[l].rows(), model.weights[l].cols());
      biases.emplace_back(model.biases[l].size(), 0.0);
    }
  }
  void clear() {
    for (auto& w : weights) std::fill(w.data().begin(), w.data().end(), 0.0);
    for (auto& b : biases) std::fill(b.begin(), b.end(), 0.0);
  }
};

/// Backward pass for one sample; accumulates scale * dL/dparam where
/// L = 1/2 (y - target)^2 in normalized space. Returns the squared error.
inline double accumulate_gradient(const TdnnModel& model, std::span<const double> input,
                                  double target, double scale, GradientBuffers& grads,
                                  std::vector<Vector>& acts) {
  const double y = forward_normalized(model, input, &acts);
  const double err = y - target;

  const std::size_t layers = model.weights.size();
  Vector delta{err * scale};
  for (std::size_t li = layers; li-- > 0;) {
    const Matrix& w = model.weights[li];
    const Vector& a_in = acts[li];
    Matrix& gw = grads.weights[li];
    Vector& gb = grads.biases[li];
    for (std::size_t i = 0; i < w.rows(); ++i) {
      gb[i] += delta[i];
      double* gr = gw.row(i);
      for (std::size_t j = 0; j < w.cols(); ++j) gr[j] += delta[i] * a_in[j];
    }
    if (li == 0) break;
    Vector prev(w.cols(), 0.0);
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w.rows(); ++i) acc += w(i, j) * delta[i];
      const double a = a_in[j];  // tansig output of layer li-1
      prev[j] = acc * (1.0 - a * a);
    }
    delta = std::move(prev);
  }
  return err * err;
}

inline double dataset_loss(const TdnnModel& model, const Dataset& ds, std::size_t begin,
                           std::size_t end) {
  double acc = 0.0;
  for (std::size_t r = begin; r < end; ++r) {
    std::span<const double> x(ds.inputs.row(r), ds.inputs.cols());
    const double err = forward_normalized(model, x) - ds.targets[r];
    acc += err * err;
  }
  return acc / (2.0 * static_cast<double>(end - begin));
}

}  // namespace detail

/// Trains one network with plain mini-batch gradient descent (batch 32,
/// ragged last batch, chronological batch order). Deterministic: equal
/// seeds give bit-identical models. Throws DivergenceError if the loss
/// leaves the finite range.
inline std::pair<TdnnModel, TrainingReport> train(const Dataset& dataset,
                                                  const TdnnConfig& config) {
  if (dataset.size() == 0) throw InsufficientDataError("train: empty dataset");
  if (dataset.train_count < 1 || dataset.holdout_count() < 1) {
    throw InsufficientDataError("train: 80/20 split needs at least one sample on each side");
  }
  if (dataset.inputs.cols() != config.input_dim()) {
    throw ContractError("train: dataset input width does not match config");
  }

  TdnnModel model = initialize_model(config);
  model.input_norm = dataset.input_norm;
  model.target_norm = dataset.target_norm;

  TrainingReport report;
  const double initial_loss = detail::dataset_loss(model, dataset, 0, dataset.train_count);

  // Seeded Fisher-Yates shuffle of the sample order each epoch; a distinct
  // stream from the weight initializer so both stay reproducible.
  Xoshiro256ss shuffle_rng(config.seed + 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(dataset.train_count);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  detail::GradientBuffers grads(model);
  std::vector<Vector> acts;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(shuffle_rng.next() % i);
      std::swap(order[i - 1], order[j]);
    }
    double epoch_sq_sum = 0.0;
    for (std::size_t start = 0; start < dataset.train_count; start += kTdnnBatchSize) {
      const std::size_t stop = std::min(start + kTdnnBatchSize, dataset.train_count);
      const double scale = 1.0 / static_cast<double>(stop - start);
      grads.clear();
      for (std::size_t r = start; r < stop; ++r) {
        std::span<const double> x(dataset.inputs.row(order[r]), dataset.inputs.cols());
        epoch_sq_sum +=
            detail::accumulate_gradient(model, x, dataset.targets[order[r]], scale, grads, acts);
      }
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        auto& wd = model.weights[l].data();
        const auto& gd = grads.weights[l].data();
        for (std::size_t i = 0; i < wd.size(); ++i) wd[i] -= config.learning_rate * gd[i];
        for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
          model.biases[l][i] -= config.learning_rate * grads.biases[l][i];
        }
      }
    }
    const double epoch_loss = epoch_sq_sum / (2.0 * static_cast<double>(dataset.train_count));
    if (!std::isfinite(epoch_loss)) {
      throw DivergenceError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    report.loss_curve.push_back(epoch_loss);
  }

  report.final_loss = detail::dataset_loss(model, dataset, 0, dataset.train_count);
  if (!std::isfinite(report.final_loss)) {
    throw DivergenceError("train: loss diverged at epoch " + std::to_string(config.epochs - 1));
  }
  report.converged = config.epochs == 0 || report.final_loss < initial_loss;

  auto eval = [&](std::size_t begin, std::size_t end, double& out_cc, double& out_ce) {
    Vector measured, predicted;
    measured.reserve(end - begin);
    predicted.reserve(end - begin);
    for (std::size_t r = begin; r < end; ++r) {
      std::span<const double> x(dataset.inputs.row(r), dataset.inputs.cols());
      predicted.push_back(denormalize_target(model, detail::forward_normalized(model, x)));
      measured.push_back(dataset.raw_targets[r]);
    }
    try {
      out_cc = cc(measured, predicted);
      out_ce = ce(measured, predicted);
    } catch (const Error&) {  // constant split: metrics undefined
      out_cc = std::numeric_limits<double>::quiet_NaN();
      out_ce = std::numeric_limits<double>::quiet_NaN();
    }
  };
  eval(0, dataset.train_count, report.train_cc, report.train_ce);
  eval(dataset.train_count, dataset.size(), report.holdout_cc, report.holdout_ce);
  return {std::move(model), std::move(report)};
}

/// Compares the analytic gradient of the single-sample loss against central
/// finite differences (step 1e-6) over every parameter; returns the largest
/// relative discrepancy.
inline double gradient_check(const TdnnModel& model, std::span<const double> normalized_input,
                             double normalized_target) {
  detail::GradientBuffers grads(model);
  std::vector<Vector> acts;
  detail::accumulate_gradient(model, normalized_input, normalized_target, 1.0, grads, acts);

  TdnnModel probe = model;
  const double step = 1e-6;
  auto loss_at = [&] {
    const double err = detail::forward_normalized(probe, normalized_input) - normalized_target;
    return 0.5 * err * err;
  };

  double worst = 0.0;
  auto check_param = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + step;
    const double hi = loss_at();
    param = saved - step;
    const double lo = loss_at();
    param = saved;
    const double numeric = (hi - lo) / (2.0 * step);
    const double rel =
        std::abs(analytic - numeric) / std::max(std::abs(analytic) + std::abs(numeric), 1e-12);
    worst = std::max(worst, rel);
  };
  for (std::size_t l = 0; l < probe.weights.size(); ++l) {
    auto& wd = probe.weights[l].data();
    for (std::size_t i = 0; i < wd.size(); ++i) check_param(wd[i], grads.weights[l].data()[i]);
    for (std::size_t i = 0; i < probe.biases[l].size(); ++i) {
      check_param(probe.biases[l][i], grads.biases[l][i]);
    }
  }
  return worst;
}

/// A bag of networks trained from consecutive seeds; the ensemble
/// prediction is the arithmetic mean of member predictions.
struct Ensemble {
  std::vector<TdnnModel> members;

  const TdnnConfig& config() const {
    if (members.empty()) throw ContractError("ensemble is empty");
    return members.front().config;
  }

  double predict(std::span<const double> raw_window) const {
    if (members.empty()) throw ContractError("ensemble is empty");
    double acc = 0.0;
    for (const auto& member : members) acc += steercomp::predict(member, raw_window);
    return acc / static_cast<double>(members.size());
  }
};

/// Trains `members` networks concurrently (member i uses seed + i) and
/// returns them in member-index order, so the result is independent of
/// scheduling. Divergence in a member is reported with its index.
inline std::pair<Ensemble, std::vector<TrainingReport>> train_ensemble(
    const Dataset& dataset, const TdnnConfig& config, std::size_t members = 10) {
  if (members < 1) throw ContractError("train_ensemble: members must be >= 1");

  std::vector<std::future<std::pair<TdnnModel, TrainingReport>>> futures;
  futures.reserve(members);
  for (std::size_t i = 0; i < members; ++i) {
    TdnnConfig member_config = config;
    member_config.seed = config.seed + i;
    futures.push_back(std::async(std::launch::async,
                                 [&dataset, member_config] { return train(dataset, member_config); }));
  }

  Ensemble ensemble;
  std::vector<TrainingReport> reports;
  for (std::size_t i = 0; i < members; ++i) {
    try {
      auto [model, report] = futures[i].get();
      ensemble.members.push_back(std::move(model));
      reports.push_back(std::move(report));
    } catch (const DivergenceError& e) {
      throw DivergenceError("member " + std::to_string(i) + ": " + e.what());
    }
  }
  return {std::move(ensemble), std::move(reports)};
}

// ---------------------------------------------------------------------------
// Model file format (plain text, line oriented):
//   steercomp-tdnn v1
//   taps tap_spacing horizon_steps feature_count hidden0 hidden1 lr seed
//   per layer: "rows cols", rows weight lines, one bias line
//   feature_count lines "mean scale", then one target "mean scale" line
// Ensembles start with "members k" followed by k embedded models.
// ---------------------------------------------------------------------------

namespace detail {

inline void write_value(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out << buf;
}

inline void write_model_body(std::ostream& out, const TdnnModel& model) {
  const TdnnConfig& c = model.config;
  if (c.hidden.size() != 2) {
    throw ContractError("model file format requires exactly two hidden layers");
  }
  out << "steercomp-tdnn v1\n";
  out << c.taps << ' ';
  write_value(out, c.tap_spacing);
  out << ' ' << c.horizon_steps << ' ' << c.feature_count << ' ' << c.hidden[0] << ' '
      << c.hidden[1] << ' ';
  write_value(out, c.learning_rate);
  out << ' ' << c.seed << '\n';
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    const Matrix& w = model.weights[l];
    out << w.rows() << ' ' << w.cols() << '\n';
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = 0; j < w.cols(); ++j) {
        if (j) out << ' ';
        write_value(out, w(i, j));
      }
      out << '\n';
    }
    for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
      if (i) out << ' ';
      write_value(out, model.biases[l][i]);
    }
    out << '\n';
  }
  for (const auto& ns : model.input_norm) {
    write_value(out, ns.mean);
    out << ' ';
    write_value(out, ns.scale);
    out << '\n';
  }
  write_value(out, model.target_norm.mean);
  out << ' ';
  write_value(out, model.target_norm.scale);
  out << '\n';
}

inline std::string read_line(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": truncated model file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline TdnnModel read_model_body(std::istream& in, const std::string& origin) {
  if (read_line(in, origin) != "steercomp-tdnn v1") {
    throw DataError(origin + ": bad model header (expected 'steercomp-tdnn v1')");
  }
  TdnnModel model;
  TdnnConfig& c = model.config;
  {
    std::istringstream cfg(read_line(in, origin));
    std::size_t h0 = 0, h1 = 0;
    if (!(cfg >> c.taps >> c.tap_spacing >> c.horizon_steps >> c.feature_count >> h0 >> h1 >>
          c.learning_rate >> c.seed)) {
      throw DataError(origin + ": bad model config line");
    }
    c.hidden = {h0, h1};
  }
  std::vector<std::size_t> dims{c.input_dim(), c.hidden[0], c.hidden[1], 1};
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::size_t rows = 0, cols = 0;
    {
      std::istringstream hdr(read_line(in, origin));
      if (!(hdr >> rows >> cols) || rows != dims[l + 1] || cols != dims[l]) {
        throw DataError(origin + ": layer " + std::to_string(l) + " has unexpected shape");
      }
    }
    Matrix w(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
      std::istringstream row(read_line(in, origin));
      for (std::size_t j = 0; j < cols; ++j) {
        if (!(row >> w(i, j))) throw DataError(origin + ": short weight row");
      }
    }
    Vector b(rows);
    std::istringstream brow(read_line(in, origin));
    for (std::size_t i = 0; i < rows; ++i) {
      if (!(brow >> b[i])) throw DataError(origin + ": short bias row");
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(std::move(b));
  }
  model.input_norm.resize(c.feature_count);
  for (auto& ns : model.input_norm) {
    std::istringstream row(read_line(in, origin));
    if (!(row >> ns.mean >> ns.scale)) throw DataError(origin + ": bad input norm line");
  }
  {
    std::istringstream row(read_line(in, origin));
    if (!(row >> model.target_norm.mean >> model.target_norm.scale)) {
      throw DataError(origin + ": bad target norm line");
    }
  }
  for (const auto& w : model.weights) {
    for (double value : w.data()) {
      if (!std::isfinite(value)) throw DataError(origin + ": non-finite weight");
    }
  }
  return model;
}

}  // namespace detail

inline void save_ensemble(const Ensemble& ensemble, const std::string& path) {
  if (ensemble.members.empty()) throw ContractError("save_ensemble: empty ensemble");
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "members " << ensemble.members.size() << '\n';
  for (const auto& member : ensemble.members) detail::write_model_body(out, member);
  if (!out) throw IoError("model write failed: " + path);
}

/// Loads either a bare model or a `members k` ensemble file.
inline Ensemble load_ensemble(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Ensemble ensemble;
  std::string first;
  if (!std::getline(in, first)) throw DataError(path + ": empty model file");
  if (!first.empty() && first.back() == '\r') first.pop_back();
  if (first.rfind("members ", 0) == 0) {
    const std::size_t count = std::strtoull(first.c_str() + 8, nullptr, 10);
    if (count < 1) throw DataError(path + ": ensemble with no members");
    for (std::size_t i = 0; i < count; ++i) {
      ensemble.members.push_back(detail::read_model_body(in, path));
    }
  } else {
    in.seekg(0);
    ensemble.members.push_back(detail::read_model_body(in, path));
  }
  // members must agree on everything but the seed
  const TdnnConfig& head = ensemble.members.front().config;
  for (const auto& member : ensemble.members) {
    const TdnnConfig& mc = member.config;
    if (mc.taps != head.taps || mc.horizon_steps != head.horizon_steps ||
        mc.feature_count != head.feature_count || mc.hidden != head.hidden ||
        mc.tap_spacing != head.tap_spacing) {
      throw DataError(path + ": ensemble members disagree on configuration");
    }
  }
  return ensemble;
}

}  // namespace steercomp
