#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "steercomp/errors.hpp"
#include "steercomp/plant.hpp"

namespace steercomp {

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double_value(const std::string& text, const std::string& key) {
  char* end = nullptr;
  const double v = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError("config: bad numeric value for " + key + ": '" + text + "'");
  }
  return v;
}

inline std::uint64_t parse_u64_value(const std::string& text, const std::string& key) {
  char* end = nullptr;
  const std::uint64_t v = std::strtoull(text.c_str(), &end, 10);
  if (text.empty() || end != text.c_str() + text.size()) {
    throw ConfigError("config: bad integer value for " + key + ": '" + text + "'");
  }
  return v;
}

inline bool parse_bool_value(const std::string& text, const std::string& key) {
  if (text == "on" || text == "true" || text == "1") return true;
  if (text == "off" || text == "false" || text == "0") return false;
  throw ConfigError("config: bad boolean value for " + key + ": '" + text + "'");
}

inline std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  std::string cur;
  std::istringstream ss(text);
  while (std::getline(ss, cur, ',')) out.push_back(parse_double_value(trim(cur), key));
  return out;
}

}  // namespace detail

/// Parsed scenario file: the resolved ScenarioConfig plus any [run] section
/// (present in run manifests, absent in hand-written configs).
struct ParsedConfig {
  ScenarioConfig scenario;
  std::map<std::string, std::string> run;
};

/// Reads the INI-style scenario format: `[section]` headers, `key = value`
/// lines, `#`/`;` comments. Unknown keys are rejected so typos fail loudly.
inline ParsedConfig parse_scenario_config(std::istream& in,
                                          const std::string& origin = "<config>") {
  ParsedConfig parsed;
  ScenarioConfig& cfg = parsed.scenario;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string text = detail::trim(line);
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty() || text[0] == '#' || text[0] == ';') continue;
    if (text.front() == '[') {
      if (text.back() != ']') {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header");
      }
      section = detail::trim(text.substr(1, text.size() - 2));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));

    auto unknown = [&]() -> ConfigError {
      return ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key +
                         "' in section [" + section + "]");
    };

    if (section == "run") {
      parsed.run[key] = value;
    } else if (section == "scenario") {
      if (key == "seed") cfg.seed = detail::parse_u64_value(value, key);
      else if (key == "duration") cfg.duration = detail::parse_double_value(value, key);
      else if (key == "speed") cfg.speed = detail::parse_double_value(value, key);
      else if (key == "compensator") cfg.compensator_enabled = detail::parse_bool_value(value, key);
      else if (key == "model") cfg.model_path = value;
      else if (key == "excitation") cfg.excitation = value;
      else if (key == "path_total_length") cfg.path_total_length = detail::parse_double_value(value, key);
      else if (key == "path_lane_offset") cfg.path_lane_offset = detail::parse_double_value(value, key);
      else if (key == "path_sections") {
        const auto list = detail::parse_double_list(value, key);
        if (list.size() != 5) throw ConfigError(origin + ": path_sections needs 5 lengths");
        for (std::size_t i = 0; i < 5; ++i) cfg.path_sections[i] = list[i];
      } else throw unknown();
    } else if (section == "plant") {
      if (key == "sample_period") cfg.sample_period = detail::parse_double_value(value, key);
      else if (key == "wheelbase") cfg.wheelbase = detail::parse_double_value(value, key);
      else if (key == "steering_ratio") cfg.steering_ratio = detail::parse_double_value(value, key);
      else if (key == "lookahead") cfg.lookahead = detail::parse_double_value(value, key);
      else if (key == "max_front_wheel") cfg.max_front_wheel = detail::parse_double_value(value, key);
      else throw unknown();
    } else if (section == "actuator") {
      if (key == "delay_steps") cfg.actuator_delay_steps = static_cast<std::size_t>(detail::parse_u64_value(value, key));
      else if (key == "noise_std") cfg.actuator_noise_std = detail::parse_double_value(value, key);
      else if (key == "w1") cfg.error_weight_td = detail::parse_double_value(value, key);
      else if (key == "w2") cfg.error_weight_rd = detail::parse_double_value(value, key);
      else throw unknown();
    } else if (section == "compensator") {
      if (key == "kp") cfg.gains.kp = detail::parse_double_value(value, key);
      else if (key == "ki") cfg.gains.ki = detail::parse_double_value(value, key);
      else if (key == "kd") cfg.gains.kd = detail::parse_double_value(value, key);
      else if (key == "w0") cfg.gains.w0 = detail::parse_double_value(value, key);
      else if (key == "output_limit") cfg.gains.output_limit = detail::parse_double_value(value, key);
      else throw unknown();
    } else if (section == "predictor") {
      if (key == "taps") cfg.predictor.taps = static_cast<std::size_t>(detail::parse_u64_value(value, key));
      else if (key == "horizon_steps") cfg.predictor.horizon_steps = static_cast<std::size_t>(detail::parse_u64_value(value, key));
      else if (key == "feature_count") cfg.predictor.feature_count = static_cast<std::size_t>(detail::parse_u64_value(value, key));
      else if (key == "hidden") {
        const auto list = detail::parse_double_list(value, key);
        cfg.predictor.hidden.clear();
        for (double v : list) cfg.predictor.hidden.push_back(static_cast<std::size_t>(v));
      } else if (key == "learning_rate") cfg.predictor.learning_rate = detail::parse_double_value(value, key);
      else if (key == "epochs") cfg.predictor.epochs = static_cast<std::size_t>(detail::parse_u64_value(value, key));
      else if (key == "seed") cfg.predictor.seed = detail::parse_u64_value(value, key);
      else throw unknown();
    } else {
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown section [" + section +
                        "]");
    }
  }
  // the compensator and predictor must agree with the plant clock
  cfg.gains.sample_period = cfg.sample_period;
  cfg.predictor.tap_spacing = cfg.sample_period;
  return parsed;
}

inline ParsedConfig load_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_scenario_config(in, path);
}

/// Writes the fully resolved configuration. `run_entries`, when non-empty,
/// is emitted first as a [run] section — that is the run-manifest form.
inline void write_scenario_config(
    const ScenarioConfig& cfg, std::ostream& out,
    const std::vector<std::pair<std::string, std::string>>& run_entries = {}) {
  using detail::format_double;
  if (!run_entries.empty()) {
    out << "[run]\n";
    for (const auto& [key, value] : run_entries) out << key << " = " << value << '\n';
    out << '\n';
  }
  out << "[scenario]\n";
  out << "seed = " << cfg.seed << '\n';
  out << "duration = " << format_double(cfg.duration) << '\n';
  out << "speed = " << format_double(cfg.speed) << '\n';
  out << "compensator = " << (cfg.compensator_enabled ? "on" : "off") << '\n';
  out << "model = " << cfg.model_path << '\n';
  out << "excitation = " << cfg.excitation << '\n';
  out << "path_total_length = " << format_double(cfg.path_total_length) << '\n';
  out << "path_lane_offset = " << format_double(cfg.path_lane_offset) << '\n';
  out << "path_sections = ";
  for (std::size_t i = 0; i < cfg.path_sections.size(); ++i) {
    if (i) out << ',';
    out << format_double(cfg.path_sections[i]);
  }
  out << "\n\n[plant]\n";
  out << "sample_period = " << format_double(cfg.sample_period) << '\n';
  out << "wheelbase = " << format_double(cfg.wheelbase) << '\n';
  out << "steering_ratio = " << format_double(cfg.steering_ratio) << '\n';
  out << "lookahead = " << format_double(cfg.lookahead) << '\n';
  out << "max_front_wheel = " << format_double(cfg.max_front_wheel) << '\n';
  out << "\n[actuator]\n";
  out << "delay_steps = " << cfg.actuator_delay_steps << '\n';
  out << "noise_std = " << format_double(cfg.actuator_noise_std) << '\n';
  out << "w1 = " << format_double(cfg.error_weight_td) << '\n';
  out << "w2 = " << format_double(cfg.error_weight_rd) << '\n';
  out << "\n[compensator]\n";
  out << "kp = " << format_double(cfg.gains.kp) << '\n';
  out << "ki = " << format_double(cfg.gains.ki) << '\n';
  out << "kd = " << format_double(cfg.gains.kd) << '\n';
  out << "w0 = " << format_double(cfg.gains.w0) << '\n';
  out << "output_limit = " << format_double(cfg.gains.output_limit) << '\n';
  out << "\n[predictor]\n";
  out << "taps = " << cfg.predictor.taps << '\n';
  out << "horizon_steps = " << cfg.predictor.horizon_steps << '\n';
  out << "feature_count = " << cfg.predictor.feature_count << '\n';
  out << "hidden = ";
  for (std::size_t i = 0; i < cfg.predictor.hidden.size(); ++i) {
    if (i) out << ',';
    out << cfg.predictor.hidden[i];
  }
  out << '\n';
  out << "learning_rate = " << format_double(cfg.predictor.learning_rate) << '\n';
  out << "epochs = " << cfg.predictor.epochs << '\n';
  out << "seed = " << cfg.predictor.seed << '\n';
}

inline void save_manifest(const ScenarioConfig& cfg, const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& run_entries) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_scenario_config(cfg, out, run_entries);
  if (!out) throw IoError("manifest write failed: " + path);
}

}  // namespace steercomp
