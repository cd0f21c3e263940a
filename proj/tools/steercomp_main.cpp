// steercomp command-line workbench: telemetry analysis, predictor training,
// closed-loop simulation and run comparison. One binary, four subcommands;
// every run is reproducible from its manifest and seed.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "steercomp/steercomp.hpp"

namespace {

using namespace steercomp;

std::string fmt(double v) { return detail::format_double(v); }

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) {
    cur = detail::trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

/// Data stream: --out file when given, stdout otherwise.
class OutputSink {
 public:
  explicit OutputSink(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw IoError("cannot open " + path + " for writing");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::optional<std::uint64_t> env_seed_override() {
  const char* env = std::getenv("STEERCOMP_SEED");
  if (!env || !*env) return std::nullopt;
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0') throw ConfigError("STEERCOMP_SEED is not an integer");
  return v;
}

// -------------------------------------------------------------------------
// analyze
// -------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string input;
  std::string out;
  double sample_period = 0.05;
  // pca
  std::size_t top_k = 3;
  std::string features;
  // delay
  double max_shift = 0.4;
  double step = 0.02;
  std::string cmd_col = "steer_cmd";
  std::string meas_col = "steer_meas";
  // segment
  double threshold = 0.2;
};

void write_analyze_manifest(const AnalyzeArgs& args, const std::string& op,
                            const std::vector<std::pair<std::string, std::string>>& extra) {
  if (args.out.empty()) return;  // stdout runs leave no files to reproduce
  std::ofstream out(args.out + ".manifest");
  if (!out) throw IoError("cannot open " + args.out + ".manifest for writing");
  out << "[run]\n";
  out << "tool = steercomp\n";
  out << "subcommand = analyze " << op << '\n';
  out << "input = " << args.input << '\n';
  out << "out = " << args.out << '\n';
  out << "sample_period = " << fmt(args.sample_period) << '\n';
  for (const auto& [key, value] : extra) out << key << " = " << value << '\n';
}

int run_analyze_pca(const AnalyzeArgs& args) {
  const TelemetryLog log = ingest_csv(args.input, args.sample_period);
  const std::vector<std::string> names =
      args.features.empty() ? telemetry_feature_names() : split_names(args.features);
  const FeatureMatrix fm = build_feature_matrix(log, names);
  const auto [centered, cov] = center_and_covariance(fm);
  const PcaResult result = pca(cov, std::min(args.top_k, names.size()));

  OutputSink sink(args.out);
  std::ostream& out = sink.stream();
  out << "component,eigenvalue,contribution_rate\n";
  for (std::size_t k = 0; k < result.eigenvalues.size(); ++k) {
    out << (k + 1) << ',' << fmt(result.eigenvalues[k]) << ','
        << fmt(result.contribution_rates[k]) << '\n';
  }
  out << "\nfeature,score,rank,selected\n";
  std::vector<std::size_t> order(names.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return result.feature_scores[a] > result.feature_scores[b];
  });
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const std::size_t i = order[rank];
    const bool selected =
        std::find(result.selected.begin(), result.selected.end(), i) != result.selected.end();
    out << names[i] << ',' << fmt(result.feature_scores[i]) << ',' << (rank + 1) << ','
        << (selected ? 1 : 0) << '\n';
  }
  write_analyze_manifest(args, "pca",
                         {{"top_k", std::to_string(args.top_k)}, {"features", args.features}});
  return 0;
}

int run_analyze_delay(const AnalyzeArgs& args) {
  const TelemetryLog log = ingest_csv(args.input, args.sample_period);
  Vector cmd, meas;
  cmd.reserve(log.size());
  meas.reserve(log.size());
  for (const auto& frame : log.frames) {
    cmd.push_back(get_field(frame, args.cmd_col));
    meas.push_back(get_field(frame, args.meas_col));
  }
  const DelayScan scan = estimate_delay(cmd, meas, args.max_shift, args.step, log.sample_period);

  OutputSink sink(args.out);
  std::ostream& out = sink.stream();
  out << "shift,rmse\n";
  for (std::size_t i = 0; i < scan.shifts.size(); ++i) {
    out << fmt(scan.shifts[i]) << ',' << fmt(scan.rmse_at_shift[i]) << '\n';
  }
  char line[160];
  std::snprintf(line, sizeof(line), "best_shift=%.3f best_rmse=%.6f rmse_at_zero=%.6f ratio=%.4f\n",
                scan.best_shift, scan.best_rmse, scan.rmse_at_zero,
                scan.rmse_at_zero > 0.0 ? scan.best_rmse / scan.rmse_at_zero : 0.0);
  std::cout << line;
  write_analyze_manifest(args, "delay",
                         {{"max_shift", fmt(args.max_shift)},
                          {"step", fmt(args.step)},
                          {"cmd_col", args.cmd_col},
                          {"meas_col", args.meas_col}});
  return 0;
}

int run_analyze_segment(const AnalyzeArgs& args) {
  const TelemetryLog log = ingest_csv(args.input, args.sample_period);
  Vector cmd, meas;
  for (const auto& frame : log.frames) {
    cmd.push_back(frame.steer_cmd);
    meas.push_back(frame.steer_meas);
  }
  const SegmentRmse seg = segment_rmse(cmd, meas, args.threshold);

  OutputSink sink(args.out);
  std::ostream& out = sink.stream();
  out << "segment,count,rmse\n";
  out << "straight," << seg.straight_count << ','
      << (seg.straight ? fmt(*seg.straight) : "NA") << '\n';
  out << "curve," << seg.curve_count << ',' << (seg.curve ? fmt(*seg.curve) : "NA") << '\n';
  out << "total," << (seg.straight_count + seg.curve_count) << ',' << fmt(seg.total) << '\n';
  write_analyze_manifest(args, "segment", {{"threshold", fmt(args.threshold)}});
  return 0;
}

// -------------------------------------------------------------------------
// train
// -------------------------------------------------------------------------

struct TrainArgs {
  std::string input;
  std::string out;
  std::string report;
  std::string config_path;
  std::string features = "steer_cmd,steer_torque,vel_x";
  std::size_t taps = 5;
  std::size_t horizon = 4;
  std::size_t restarts = 10;
  std::size_t epochs = 500;
  double lr = 1e-3;
  double sample_period = 0.05;
  std::uint64_t seed = 1;
};

int run_train(TrainArgs args, const CLI::App* cmd) {
  if (!args.config_path.empty()) {
    const ParsedConfig parsed = load_scenario_config(args.config_path);
    const TdnnConfig& pc = parsed.scenario.predictor;
    if (cmd->count("--taps") == 0) args.taps = pc.taps;
    if (cmd->count("--horizon") == 0) args.horizon = pc.horizon_steps;
    if (cmd->count("--epochs") == 0) args.epochs = pc.epochs;
    if (cmd->count("--lr") == 0) args.lr = pc.learning_rate;
    if (cmd->count("--seed") == 0) args.seed = pc.seed;
    if (cmd->count("--sample-period") == 0) args.sample_period = parsed.scenario.sample_period;
    auto run_value = [&](const char* key) -> std::optional<std::string> {
      const auto it = parsed.run.find(key);
      if (it == parsed.run.end()) return std::nullopt;
      return it->second;
    };
    if (cmd->count("--input") == 0) {
      if (const auto v = run_value("input")) args.input = *v;
    }
    if (cmd->count("--features") == 0) {
      if (const auto v = run_value("features")) args.features = *v;
    }
    if (cmd->count("--restarts") == 0) {
      if (const auto v = run_value("restarts")) {
        args.restarts = static_cast<std::size_t>(detail::parse_u64_value(*v, "restarts"));
      }
    }
  }
  if (const auto env = env_seed_override()) args.seed = *env;
  if (args.input.empty()) throw ConfigError("train: --input is required");
  if (args.out.empty()) throw ConfigError("train: --out is required");

  const TelemetryLog log = ingest_csv(args.input, args.sample_period);
  const std::vector<std::string> features = split_names(args.features);

  TdnnConfig config;
  config.taps = args.taps;
  config.tap_spacing = args.sample_period;
  config.horizon_steps = args.horizon;
  config.feature_count = features.size();
  config.epochs = args.epochs;
  config.learning_rate = args.lr;
  config.seed = args.seed;

  const Dataset dataset = assemble_dataset(log, features, config);
  auto [ensemble, reports] = train_ensemble(dataset, config, args.restarts);
  save_ensemble(ensemble, args.out);

  // ensemble holdout metrics
  Vector measured, predicted;
  for (std::size_t r = dataset.train_count; r < dataset.size(); ++r) {
    std::span<const double> x(dataset.inputs.row(r), dataset.inputs.cols());
    Vector raw(x.size());
    const std::size_t f_count = config.feature_count;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const NormStat& ns = dataset.input_norm[j % f_count];
      raw[j] = x[j] * ns.scale + ns.mean;
    }
    predicted.push_back(ensemble.predict(raw));
    measured.push_back(dataset.raw_targets[r]);
  }
  double ens_cc = std::numeric_limits<double>::quiet_NaN();
  double ens_ce = std::numeric_limits<double>::quiet_NaN();
  try {
    ens_cc = cc(measured, predicted);
    ens_ce = ce(measured, predicted);
  } catch (const Error&) {
  }

  {
    OutputSink sink(args.report);
    std::ostream& out = sink.stream();
    out << "member,epoch,loss,train_cc,train_ce,holdout_cc,holdout_ce,converged\n";
    for (std::size_t i = 0; i < reports.size(); ++i) {
      const TrainingReport& r = reports[i];
      for (std::size_t e = 0; e < r.loss_curve.size(); ++e) {
        out << i << ',' << e << ',' << fmt(r.loss_curve[e]) << ",,,,,\n";
      }
      out << i << ",," << fmt(r.final_loss) << ',' << fmt(r.train_cc) << ',' << fmt(r.train_ce)
          << ',' << fmt(r.holdout_cc) << ',' << fmt(r.holdout_ce) << ','
          << (r.converged ? 1 : 0) << '\n';
    }
    out << "ensemble,,,,," << fmt(ens_cc) << ',' << fmt(ens_ce) << ",\n";
  }

  // run manifest alongside the model file
  ScenarioConfig scenario;
  scenario.sample_period = args.sample_period;
  scenario.predictor = config;
  scenario.gains.sample_period = args.sample_period;
  save_manifest(scenario, args.out + ".manifest",
                {{"tool", "steercomp"},
                 {"subcommand", "train"},
                 {"input", args.input},
                 {"out", args.out},
                 {"features", args.features},
                 {"restarts", std::to_string(args.restarts)}});

  std::fprintf(stderr, "trained %zu members on %zu samples (holdout %zu): ensemble CC=%.4f CE=%.4f\n",
               args.restarts, dataset.size(), dataset.holdout_count(), ens_cc, ens_ce);
  return 0;
}

// -------------------------------------------------------------------------
// simulate
// -------------------------------------------------------------------------

struct SimulateArgs {
  std::string config_path;
  std::string out;
  std::string compensator;  // "", "on", "off"
  std::string model;
  std::string excitation;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

int run_simulate(const SimulateArgs& args) {
  ScenarioConfig config;
  if (!args.config_path.empty()) config = load_scenario_config(args.config_path).scenario;
  if (!args.compensator.empty()) {
    config.compensator_enabled = detail::parse_bool_value(args.compensator, "compensator");
  }
  if (!args.model.empty()) config.model_path = args.model;
  if (!args.excitation.empty()) config.excitation = args.excitation;
  if (args.seed_given) config.seed = args.seed;
  if (const auto env = env_seed_override()) config.seed = *env;
  if (args.out.empty()) throw ConfigError("simulate: --out is required");

  std::vector<std::pair<std::string, std::string>> run_entries{
      {"tool", "steercomp"}, {"subcommand", "simulate"}, {"out", args.out}};

  if (!config.excitation.empty()) {
    const TelemetryLog log = simulate_training_log(config, config.excitation);
    export_csv(log, args.out);
    run_entries.emplace_back("path_hash", "0");
    save_manifest(config, args.out + ".manifest", run_entries);
    std::fprintf(stderr, "%s: %zu frames (%s excitation)\n", args.out.c_str(), log.size(),
                 config.excitation.c_str());
    return 0;
  }

  const SimLog log = run_simulation(config);
  export_sim_csv(log, args.out);
  char hash_buf[32];
  std::snprintf(hash_buf, sizeof(hash_buf), "%016" PRIx64, log.path_hash);
  run_entries.emplace_back("path_hash", hash_buf);
  save_manifest(config, args.out + ".manifest", run_entries);
  const MetricsReport metrics = tracking_metrics(log);
  std::fprintf(stderr,
               "%s: %zu steps, compensator %s, max |lateral error| %.4f m, oscillation %.5f rad\n",
               args.out.c_str(), log.summary.steps, config.compensator_enabled ? "on" : "off",
               *metrics.max_tracking_error, *metrics.oscillation_index);
  return 0;
}

// -------------------------------------------------------------------------
// compare
// -------------------------------------------------------------------------

struct CompareArgs {
  std::string baseline;
  std::string optimized;
  std::string baseline_manifest;
  std::string optimized_manifest;
  std::string out;
};

std::optional<std::string> manifest_path_hash(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  const ParsedConfig parsed = parse_scenario_config(in, path);
  const auto it = parsed.run.find("path_hash");
  if (it == parsed.run.end()) return std::nullopt;
  return it->second;
}

int run_compare(const CompareArgs& args) {
  const std::string manifest_a =
      args.baseline_manifest.empty() ? args.baseline + ".manifest" : args.baseline_manifest;
  const std::string manifest_b =
      args.optimized_manifest.empty() ? args.optimized + ".manifest" : args.optimized_manifest;
  const auto hash_a = manifest_path_hash(manifest_a);
  const auto hash_b = manifest_path_hash(manifest_b);
  if (hash_a && hash_b && *hash_a != *hash_b) {
    throw ConfigError("compare: runs used different paths (manifest path_hash mismatch)");
  }

  const SimSeries a = load_sim_csv(args.baseline);
  const SimSeries b = load_sim_csv(args.optimized);
  const MetricsReport ma = tracking_metrics(a.lateral_error, a.theta);
  const MetricsReport mb = tracking_metrics(b.lateral_error, b.theta);

  OutputSink sink(args.out);
  std::ostream& out = sink.stream();
  out << "metric,baseline,optimized,improvement\n";
  auto row = [&](const char* name, double va, double vb) {
    out << name << ',' << fmt(va) << ',' << fmt(vb) << ','
        << (va != 0.0 ? fmt(improvement(va, vb)) : "NA") << '\n';
  };
  row("max_tracking_error", *ma.max_tracking_error, *mb.max_tracking_error);
  row("oscillation_index", *ma.oscillation_index, *mb.oscillation_index);
  row("lateral_rmse", ma.rmse, mb.rmse);
  out << "oscillation_zero_crossings," << ma.oscillation_zero_crossings << ','
      << mb.oscillation_zero_crossings << ",NA\n";
  out << "samples," << ma.sample_count << ',' << mb.sample_count << ",NA\n";

  std::fprintf(stderr,
               "baseline %zu samples vs optimized %zu samples\n"
               "  max tracking error: %.4f -> %.4f m (%+.1f%%)\n"
               "  oscillation index:  %.5f -> %.5f rad (%+.1f%%)\n",
               ma.sample_count, mb.sample_count, *ma.max_tracking_error, *mb.max_tracking_error,
               100.0 * improvement(*ma.max_tracking_error, *mb.max_tracking_error),
               *ma.oscillation_index, *mb.oscillation_index,
               100.0 * improvement(*ma.oscillation_index, *mb.oscillation_index));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"steercomp: steering-loop analysis, error prediction and feedforward compensation"};
  app.require_subcommand(1);

  AnalyzeArgs analyze_args;
  CLI::App* analyze = app.add_subcommand("analyze", "Telemetry analysis (pca, delay, segment)");
  analyze->require_subcommand(1);

  CLI::App* pca_cmd = analyze->add_subcommand("pca", "Contribution rates and feature ranking");
  pca_cmd->add_option("--input", analyze_args.input, "telemetry CSV")->required();
  pca_cmd->add_option("--top-k", analyze_args.top_k, "features to select");
  pca_cmd->add_option("--features", analyze_args.features, "comma-separated feature subset");
  pca_cmd->add_option("--sample-period", analyze_args.sample_period, "ingest grid, seconds");
  pca_cmd->add_option("--out", analyze_args.out, "output CSV (default stdout)");

  CLI::App* delay_cmd = analyze->add_subcommand("delay", "Shift-and-RMSE dead time scan");
  delay_cmd->add_option("--input", analyze_args.input, "telemetry CSV")->required();
  delay_cmd->add_option("--max-shift", analyze_args.max_shift, "largest shift, seconds");
  delay_cmd->add_option("--step", analyze_args.step, "scan step, seconds");
  delay_cmd->add_option("--cmd-col", analyze_args.cmd_col, "command column");
  delay_cmd->add_option("--meas-col", analyze_args.meas_col, "measurement column");
  delay_cmd->add_option("--sample-period", analyze_args.sample_period, "ingest grid, seconds");
  delay_cmd->add_option("--out", analyze_args.out, "output CSV (default stdout)");

  CLI::App* segment_cmd = analyze->add_subcommand("segment", "Straight/curve RMSE split");
  segment_cmd->add_option("--input", analyze_args.input, "telemetry CSV")->required();
  segment_cmd->add_option("--threshold", analyze_args.threshold, "straight/curve threshold, rad");
  segment_cmd->add_option("--sample-period", analyze_args.sample_period, "ingest grid, seconds");
  segment_cmd->add_option("--out", analyze_args.out, "output CSV (default stdout)");

  TrainArgs train_args;
  CLI::App* train_cmd = app.add_subcommand("train", "Train the error-prediction ensemble");
  train_cmd->add_option("--input", train_args.input, "telemetry CSV");
  train_cmd->add_option("--out", train_args.out, "model file")->required();
  train_cmd->add_option("--report", train_args.report, "training report CSV (default stdout)");
  train_cmd->add_option("--config", train_args.config_path, "scenario config or manifest");
  train_cmd->add_option("--features", train_args.features, "comma-separated input features");
  train_cmd->add_option("--taps", train_args.taps, "delay-line depth");
  train_cmd->add_option("--horizon", train_args.horizon, "prediction lead, samples");
  train_cmd->add_option("--restarts", train_args.restarts, "ensemble members");
  train_cmd->add_option("--epochs", train_args.epochs, "training epochs");
  train_cmd->add_option("--lr", train_args.lr, "learning rate");
  train_cmd->add_option("--sample-period", train_args.sample_period, "ingest grid, seconds");
  train_cmd->add_option("--seed", train_args.seed, "base seed (member i uses seed + i)");

  SimulateArgs sim_args;
  CLI::App* simulate_cmd = app.add_subcommand("simulate", "Closed-loop run or training-log generation");
  simulate_cmd->add_option("--config", sim_args.config_path, "scenario config or manifest");
  simulate_cmd->add_option("--out", sim_args.out, "output CSV")->required();
  simulate_cmd->add_option("--compensator", sim_args.compensator, "on|off")
      ->check(CLI::IsMember({"on", "off"}));
  simulate_cmd->add_option("--model", sim_args.model, "trained model file");
  simulate_cmd->add_option("--excitation", sim_args.excitation,
                           "training-log mode: dlc|u_turn|chirp_steer|mixed");
  CLI::Option* seed_opt = simulate_cmd->add_option("--seed", sim_args.seed, "run seed");

  CompareArgs compare_args;
  CLI::App* compare_cmd = app.add_subcommand("compare", "Baseline vs optimized metrics");
  compare_cmd->add_option("--baseline", compare_args.baseline, "baseline sim CSV")->required();
  compare_cmd->add_option("--optimized", compare_args.optimized, "optimized sim CSV")->required();
  compare_cmd->add_option("--baseline-manifest", compare_args.baseline_manifest,
                          "manifest override");
  compare_cmd->add_option("--optimized-manifest", compare_args.optimized_manifest,
                          "manifest override");
  compare_cmd->add_option("--out", compare_args.out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pca_cmd->parsed()) return run_analyze_pca(analyze_args);
    if (delay_cmd->parsed()) return run_analyze_delay(analyze_args);
    if (segment_cmd->parsed()) return run_analyze_segment(analyze_args);
    if (train_cmd->parsed()) return run_train(train_args, train_cmd);
    if (simulate_cmd->parsed()) {
      sim_args.seed_given = seed_opt->count() > 0;
      return run_simulate(sim_args);
    }
    if (compare_cmd->parsed()) return run_compare(compare_args);
  } catch (const Error& e) {
    std::fprintf(stderr, "steercomp: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "steercomp: unexpected error: %s\n", e.what());
    return 1;
  }
  return 0;
}
