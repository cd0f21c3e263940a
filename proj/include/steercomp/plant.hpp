#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <fstream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "steercomp/compensator.hpp"
#include "steercomp/errors.hpp"
#include "steercomp/feature_analysis.hpp"
#include "steercomp/metrics.hpp"
#include "steercomp/predictor.hpp"
#include "steercomp/rng.hpp"
#include "steercomp/telemetry.hpp"

namespace steercomp {

inline constexpr double kPi = 3.14159265358979323846;

/// Default actuator noise, calibrated offline with calibrate_noise_std() so
/// that on the reference sine the shift-compensated residual is 28.7% of the
/// zero-shift RMSE (see ActuatorParams::error_weight_rd).
inline constexpr double kDefaultActuatorNoiseStd = 0.0391;

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t h = 1469598103934665603ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Vehicle + actuator
// ---------------------------------------------------------------------------

/// Planar state of the kinematic bicycle, referenced at the rear axle.
struct VehicleState {
  double x = 0.0, y = 0.0;
  double heading = 0.0;           // rad
  double speed = 0.0;             // m/s
  double yaw_rate = 0.0;          // rad/s
  double front_wheel_angle = 0.0; // rad, |delta_f| <= 0.4
  double steer_wheel_meas = 0.0;  // rad
};

/// Explicit-Euler kinematic bicycle update; position advances along the old
/// heading, then the heading integrates v*tan(delta_f)/L.
inline VehicleState bicycle_step(VehicleState state, double delta_f, double v, double T,
                                 double wheelbase) {
  if (!(T > 0.0) || !(wheelbase > 0.0)) throw ContractError("bicycle_step: T and L must be positive");
  if (std::abs(delta_f) > 0.4 + 1e-12) {
    throw ContractError("bicycle_step: |delta_f| must not exceed 0.4 rad");
  }
  state.x += v * std::cos(state.heading) * T;
  state.y += v * std::sin(state.heading) * T;
  const double yaw_rate = v * std::tan(delta_f) / wheelbase;
  state.heading += yaw_rate * T;
  state.speed = v;
  state.yaw_rate = yaw_rate;
  state.front_wheel_angle = delta_f;
  return state;
}

struct ActuatorParams {
  std::size_t delay_steps = 4;  // 0.2 s at T = 0.05 s
  double noise_std = kDefaultActuatorNoiseStd;  // rad
  double error_weight_td = 0.713;  // share of error budget from transport delay
  double error_weight_rd = 0.287;  // share from random disturbance
  std::uint64_t rng_seed = 1;
  double wheel_limit = 14.8 * 0.4;  // rad at the steering wheel
};

/// Steering actuator: pure transport delay plus zero-mean Gaussian
/// disturbance on the measured wheel angle. The physical wheel follows the
/// delayed command exactly; the disturbance models environment and sensor
/// error on top of it.
class Actuator {
 public:
  explicit Actuator(const ActuatorParams& params) : params_(params), rng_(params.rng_seed) {
    if (std::abs(params.error_weight_td + params.error_weight_rd - 1.0) > 1e-9) {
      throw ContractError("actuator: error weights must sum to 1");
    }
    if (params.noise_std < 0.0) throw ContractError("actuator: noise_std must be >= 0");
    buffer_.assign(params.delay_steps, 0.0);
  }

  /// Pushes the commanded wheel angle and returns the measured angle:
  /// the command from delay_steps ago plus disturbance, clamped to the
  /// mechanical range.
  double step(double u) {
    if (!std::isfinite(u)) throw ContractError("actuator: non-finite command");
    buffer_.push_back(u);
    physical_ = std::clamp(buffer_.front(), -params_.wheel_limit, params_.wheel_limit);
    buffer_.pop_front();
    double theta = physical_;
    if (params_.noise_std > 0.0) theta += params_.noise_std * rng_.gaussian();
    return std::clamp(theta, -params_.wheel_limit, params_.wheel_limit);
  }

  /// Disturbance-free wheel angle behind the latest measurement.
  double physical_angle() const { return physical_; }

  const ActuatorParams& params() const { return params_; }

 private:
  ActuatorParams params_;
  std::deque<double> buffer_;
  Xoshiro256ss rng_;
  double physical_ = 0.0;
};

// ---------------------------------------------------------------------------
// Reference paths
// ---------------------------------------------------------------------------

struct PathPoint {
  double x = 0.0, y = 0.0;
  double s = 0.0;  // arc length from path start
};

/// Polyline reference path, tangent-continuous by construction, sampled at
/// most 1 m apart.
struct PathSpec {
  std::vector<PathPoint> points;
  double total_length = 0.0;  // nominal x extent
  double lane_offset = 0.0;
  std::array<double, 5> sections{};

  double arc_length() const { return points.empty() ? 0.0 : points.back().s; }

  std::uint64_t hash() const {
    std::uint64_t h = fnv1a64(&total_length, sizeof(total_length));
    for (const auto& p : points) {
      h = fnv1a64(&p.x, sizeof(p.x), h);
      h = fnv1a64(&p.y, sizeof(p.y), h);
    }
    return h;
  }
};

namespace detail {

inline void accumulate_arc(std::vector<PathPoint>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) {
      const double dx = pts[i].x - pts[i - 1].x;
      const double dy = pts[i].y - pts[i - 1].y;
      s += std::hypot(dx, dy);
    }
    pts[i].s = s;
  }
}

}  // namespace detail

/// Double-lane-change centerline: straight entry, half-cosine offset to
/// +lane_offset, parallel section, half-cosine return, straight exit. The
/// five section lengths are centered inside total_length; the remainder is
/// split evenly into entry and exit padding.
inline PathSpec double_lane_change_path(double total_length = 200.0, double lane_offset = 3.5,
                                        std::array<double, 5> sections = {15.0, 30.0, 25.0, 25.0,
                                                                          15.0}) {
  double section_sum = 0.0;
  for (double len : sections) {
    if (!(len > 0.0)) throw ContractError("double_lane_change_path: section lengths must be positive");
    section_sum += len;
  }
  if (section_sum > total_length) {
    throw ContractError("double_lane_change_path: sections exceed total length");
  }
  if (lane_offset < 0.0) throw ContractError("double_lane_change_path: lane_offset must be >= 0");

  const double pad = (total_length - section_sum) / 2.0;
  const double x1 = pad + sections[0];          // end of entry straight
  const double x2 = x1 + sections[1];           // end of first transition
  const double x3 = x2 + sections[2];           // end of offset section
  const double x4 = x3 + sections[3];           // end of return transition

  auto offset_at = [&](double x) {
    if (x <= x1) return 0.0;
    if (x < x2) return lane_offset * 0.5 * (1.0 - std::cos(kPi * (x - x1) / sections[1]));
    if (x <= x3) return lane_offset;
    if (x < x4) return lane_offset * 0.5 * (1.0 + std::cos(kPi * (x - x3) / sections[3]));
    return 0.0;
  };

  PathSpec path;
  path.total_length = total_length;
  path.lane_offset = lane_offset;
  path.sections = sections;
  const double step = 0.5;
  const auto count = static_cast<std::size_t>(std::ceil(total_length / step));
  for (std::size_t i = 0; i <= count; ++i) {
    const double x = std::min(static_cast<double>(i) * step, total_length);
    path.points.push_back({x, offset_at(x), 0.0});
  }
  detail::accumulate_arc(path.points);
  return path;
}

/// U-turn: straight leg, 180-degree left arc, straight return leg.
inline PathSpec u_turn_path(double leg_length = 25.0, double radius = 9.0) {
  if (!(leg_length > 0.0) || !(radius > 0.0)) throw ContractError("u_turn_path: invalid geometry");
  PathSpec path;
  path.total_length = 2.0 * leg_length + kPi * radius;
  const double step = 0.5;
  auto leg_count = static_cast<std::size_t>(std::ceil(leg_length / step));
  for (std::size_t i = 0; i <= leg_count; ++i) {
    const double x = std::min(static_cast<double>(i) * step, leg_length);
    path.points.push_back({x, 0.0, 0.0});
  }
  const double dtheta = step / radius;
  const auto arc_count = static_cast<std::size_t>(std::ceil(kPi / dtheta));
  for (std::size_t i = 1; i <= arc_count; ++i) {
    const double a = std::min(static_cast<double>(i) * dtheta, kPi);
    // arc centered at (leg_length, radius), entered heading +x
    path.points.push_back({leg_length + radius * std::sin(a), radius * (1.0 - std::cos(a)), 0.0});
  }
  for (std::size_t i = 1; i <= leg_count; ++i) {
    const double x = leg_length - std::min(static_cast<double>(i) * step, leg_length);
    path.points.push_back({x, 2.0 * radius, 0.0});
  }
  detail::accumulate_arc(path.points);
  return path;
}

/// Closest-point projection onto the polyline.
struct PathProjection {
  double s = 0.0;
  double x = 0.0, y = 0.0;
  double tangent_x = 1.0, tangent_y = 0.0;
  double signed_offset = 0.0;  // positive to the left of the path tangent
};

inline PathProjection project_onto_path(const PathSpec& path, double px, double py) {
  if (path.points.size() < 2) throw ContractError("project_onto_path: path needs >= 2 points");
  PathProjection best;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < path.points.size(); ++i) {
    const PathPoint& a = path.points[i];
    const PathPoint& b = path.points[i + 1];
    const double sx = b.x - a.x, sy = b.y - a.y;
    const double len2 = sx * sx + sy * sy;
    if (len2 == 0.0) continue;
    double t = ((px - a.x) * sx + (py - a.y) * sy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const double cx = a.x + t * sx, cy = a.y + t * sy;
    const double dx = px - cx, dy = py - cy;
    const double d2 = dx * dx + dy * dy;
    if (d2 < best_d2) {
      best_d2 = d2;
      const double len = std::sqrt(len2);
      best.s = a.s + t * len;
      best.x = cx;
      best.y = cy;
      best.tangent_x = sx / len;
      best.tangent_y = sy / len;
      best.signed_offset = best.tangent_x * dy - best.tangent_y * dx;
    }
  }
  return best;
}

inline PathPoint point_at_arc(const PathSpec& path, double s) {
  if (path.points.size() < 2) throw ContractError("point_at_arc: path needs >= 2 points");
  if (s <= 0.0) return path.points.front();
  if (s >= path.points.back().s) return path.points.back();
  std::size_t lo = 0, hi = path.points.size() - 1;
  while (lo + 1 < hi) {
    const std::size_t mid = (lo + hi) / 2;
    (path.points[mid].s <= s ? lo : hi) = mid;
  }
  const PathPoint& a = path.points[lo];
  const PathPoint& b = path.points[lo + 1];
  const double seg = b.s - a.s;
  const double t = seg > 0.0 ? (s - a.s) / seg : 0.0;
  return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), s};
}

// ---------------------------------------------------------------------------
// Path tracking control (feedforward proportional, pure-pursuit geometry)
// ---------------------------------------------------------------------------

struct PtcCommand {
  double v_d = 0.0;    // m/s
  double w_d = 0.0;    // rad/s, commanded yaw rate (compensator scheduling input)
  double u_cmd = 0.0;  // rad, nominal steering-wheel angle
  bool finished = false;
};

inline PtcCommand ptc_command_at(const VehicleState& state, const PathSpec& path,
                                 const PathProjection& proj, double lookahead, double wheelbase,
                                 double steering_ratio, double target_speed,
                                 double max_front_wheel = 0.4) {
  if (!(lookahead > 0.0)) throw ContractError("ptc_command: lookahead must be positive");
  PtcCommand cmd;
  cmd.v_d = target_speed;
  if (proj.s >= path.arc_length() - 1e-2) {
    cmd.finished = true;
    return cmd;
  }
  const PathPoint target = point_at_arc(path, proj.s + lookahead);
  const double dx = target.x - state.x;
  const double dy = target.y - state.y;
  const double cos_h = std::cos(state.heading);
  const double sin_h = std::sin(state.heading);
  const double bx = cos_h * dx + sin_h * dy;
  const double by = -sin_h * dx + cos_h * dy;
  const double alpha = std::atan2(by, bx);
  const double curvature = 2.0 * std::sin(alpha) / lookahead;
  cmd.w_d = target_speed * curvature;
  const double delta_f =
      std::clamp(std::atan(wheelbase * curvature), -max_front_wheel, max_front_wheel);
  cmd.u_cmd = steering_ratio * delta_f;
  return cmd;
}

/// Nominal steering command from pure-pursuit geometry: curvature
/// 2*sin(alpha)/lookahead toward the path point one lookahead ahead of the
/// closest-point projection, mapped through the kinematic bicycle.
inline PtcCommand ptc_command(const VehicleState& state, const PathSpec& path, double lookahead,
                              double wheelbase, double steering_ratio, double target_speed,
                              double max_front_wheel = 0.4) {
  const PathProjection proj = project_onto_path(path, state.x, state.y);
  return ptc_command_at(state, path, proj, lookahead, wheelbase, steering_ratio, target_speed,
                        max_front_wheel);
}

// ---------------------------------------------------------------------------
// Scenario configuration
// ---------------------------------------------------------------------------

/// Full closed-loop scenario description; serialized to/from the INI-style
/// config file (see config.hpp).
struct ScenarioConfig {
  // [scenario]
  std::uint64_t seed = 1;
  double duration = 0.0;  // seconds; 0 = run to path completion
  double speed = 30.0 / 3.6;
  bool compensator_enabled = false;
  std::string model_path;
  std::string excitation;  // empty for closed-loop runs
  double path_total_length = 200.0;
  double path_lane_offset = 3.5;
  std::array<double, 5> path_sections{15.0, 30.0, 25.0, 25.0, 15.0};
  // initial pose; speed 0 means "use the scenario speed"
  VehicleState initial_state;
  // [plant]
  double sample_period = 0.05;
  double wheelbase = 2.85;
  double steering_ratio = 14.8;
  double lookahead = 3.0;
  double max_front_wheel = 0.4;
  // [actuator]
  std::size_t actuator_delay_steps = 4;
  double actuator_noise_std = kDefaultActuatorNoiseStd;
  double error_weight_td = 0.713;
  double error_weight_rd = 0.287;
  // [compensator]
  CompensatorGains gains;
  // [predictor]
  TdnnConfig predictor;

  double wheel_limit() const { return steering_ratio * max_front_wheel; }

  void validate() const {
    if (!(sample_period > 0.0)) throw ConfigError("sample_period must be positive");
    if (!(wheelbase > 0.0)) throw ConfigError("wheelbase must be positive");
    if (!(steering_ratio > 0.0)) throw ConfigError("steering_ratio must be positive");
    if (!(lookahead > 0.0)) throw ConfigError("lookahead must be positive");
    if (!(speed > 0.0)) throw ConfigError("speed must be positive");
    if (!(max_front_wheel > 0.0)) throw ConfigError("max_front_wheel must be positive");
    if (duration < 0.0) throw ConfigError("duration must be >= 0");
    gains.validate();
  }

  ActuatorParams actuator_params() const {
    ActuatorParams p;
    p.delay_steps = actuator_delay_steps;
    p.noise_std = actuator_noise_std;
    p.error_weight_td = error_weight_td;
    p.error_weight_rd = error_weight_rd;
    p.rng_seed = seed;
    p.wheel_limit = wheel_limit();
    return p;
  }
};

// ---------------------------------------------------------------------------
// Closed-loop simulation
// ---------------------------------------------------------------------------

struct SimStep {
  double t = 0.0;
  VehicleState vehicle;  // state at the start of the step
  double ref_x = 0.0, ref_y = 0.0;
  double lateral_error = 0.0;  // m, positive left of the path
  double u_cmd = 0.0, u1 = 0.0, u = 0.0;
  double theta = 0.0;  // measured steering-wheel angle
  CompensatorMode mode = CompensatorMode::kPi;
  bool comp_active = false;
  double e_hat = 0.0;
  bool saturated = false;
  TelemetryFrame telemetry;
};

struct SimSummary {
  double max_abs_lateral_error = 0.0;
  std::size_t saturation_count = 0;
  std::size_t steps = 0;
  double duration = 0.0;
  bool completed = false;  // reached path end (vs. duration/step cap)
};

struct SimLog {
  double sample_period = 0.05;
  std::uint64_t path_hash = 0;
  std::vector<SimStep> steps;
  SimSummary summary;

  TelemetryLog to_telemetry() const {
    TelemetryLog log;
    log.sample_period = sample_period;
    log.frames.reserve(steps.size());
    for (const auto& s : steps) log.frames.push_back(s.telemetry);
    return log;
  }

  Vector lateral_errors() const {
    Vector v;
    v.reserve(steps.size());
    for (const auto& s : steps) v.push_back(s.lateral_error);
    return v;
  }
  Vector theta_series() const {
    Vector v;
    v.reserve(steps.size());
    for (const auto& s : steps) v.push_back(s.theta);
    return v;
  }
  Vector u1_series() const {
    Vector v;
    v.reserve(steps.size());
    for (const auto& s : steps) v.push_back(s.u1);
    return v;
  }
};

inline MetricsReport tracking_metrics(const SimLog& log) {
  if (log.steps.size() < 2) throw InsufficientDataError("tracking_metrics: log too short");
  const Vector lat = log.lateral_errors();
  const Vector theta = log.theta_series();
  return tracking_metrics(std::span<const double>(lat), std::span<const double>(theta));
}

namespace detail {

inline TelemetryFrame synthesize_frame(double t, double u, double theta,
                                       const VehicleState& state, double delta_f,
                                       double physical_wheel, const ScenarioConfig& config) {
  TelemetryFrame f;
  f.t = t;
  f.steer_cmd = u;
  f.steer_meas = theta;
  // power-assist proxy on the physical (disturbance-free) wheel angle
  f.steer_torque = 12.0 * physical_wheel / config.steering_ratio;
  f.vel_x = state.speed;
  f.vel_y = 0.0;
  f.vel_z = 0.0;
  const double yaw = state.speed * std::tan(delta_f) / config.wheelbase;
  f.ang_vel_x = 0.0;
  f.ang_vel_y = 0.0;
  f.ang_vel_z = yaw;
  f.acc_x = 0.0;
  f.acc_y = state.speed * yaw;  // centripetal
  f.acc_z = 0.0;
  constexpr double kWheelRadius = 0.35, kHalfTrack = 0.79;
  f.wheel_speed_fl = (state.speed - yaw * kHalfTrack) / kWheelRadius;
  f.wheel_speed_fr = (state.speed + yaw * kHalfTrack) / kWheelRadius;
  f.wheel_speed_rl = f.wheel_speed_fl;
  f.wheel_speed_rr = f.wheel_speed_fr;
  // bounded sensor range: straight driving reports the 100 m cap
  f.turning_radius =
      std::min(config.wheelbase / std::max(std::abs(std::tan(delta_f)), 1e-12), 100.0);
  return f;
}

}  // namespace detail

/// Runs the closed loop on an explicit path. `ensemble` may be null when the
/// compensator is disabled. Identical configs and seeds give bit-identical
/// logs.
inline SimLog run_simulation_on_path(const ScenarioConfig& config, const PathSpec& path,
                                     const Ensemble* ensemble) {
  config.validate();
  const bool comp = config.compensator_enabled;
  if (comp) {
    if (!ensemble) throw ConfigError("compensator enabled but no model supplied");
    const TdnnConfig& mc = ensemble->config();
    if (mc.feature_count != 3) {
      throw ConfigError("model feature count must be 3 (steer_cmd, steer_torque, vel_x)");
    }
    if (mc.taps != config.predictor.taps) {
      throw ConfigError("model taps disagree with [predictor] taps");
    }
    if (mc.horizon_steps != config.predictor.horizon_steps) {
      throw ConfigError("model horizon disagrees with [predictor] horizon_steps");
    }
    if (std::abs(mc.tap_spacing - config.sample_period) > 1e-9) {
      throw ConfigError("model tap spacing disagrees with the sample period");
    }
  }

  const double T = config.sample_period;
  Actuator actuator(config.actuator_params());
  VehicleState state = config.initial_state;
  if (state.speed == 0.0) state.speed = config.speed;

  CompensatorState cstate;
  const std::size_t window_len = comp ? ensemble->config().taps : 0;
  std::deque<std::array<double, 3>> window;  // issued {steer_cmd, steer_torque, vel_x}
  Vector raw_input;

  SimLog log;
  log.sample_period = T;
  log.path_hash = path.hash();

  std::size_t step_cap;
  if (config.duration > 0.0) {
    step_cap = static_cast<std::size_t>(std::llround(config.duration / T));
  } else {
    step_cap = static_cast<std::size_t>(std::ceil(1.5 * path.arc_length() / (config.speed * T))) +
               1000;  // divergence guard
  }

  for (std::size_t k = 0; k < step_cap; ++k) {
    const double t = static_cast<double>(k) * T;
    const PathProjection proj = project_onto_path(path, state.x, state.y);
    const PtcCommand cmd = ptc_command_at(state, path, proj, config.lookahead, config.wheelbase,
                                          config.steering_ratio, config.speed,
                                          config.max_front_wheel);
    if (cmd.finished) {
      log.summary.completed = true;
      break;
    }

    double e_hat = 0.0;
    double u1 = 0.0;
    if (comp) {
      if (window.size() >= window_len) {
        raw_input.clear();
        for (std::size_t back = 0; back < window_len; ++back) {
          const auto& fr = window[window.size() - 1 - back];  // most recent first
          raw_input.insert(raw_input.end(), fr.begin(), fr.end());
        }
        e_hat = ensemble->predict(raw_input);
      }
      const CompensatorOutput out = compensator_step(cstate, e_hat, cmd.w_d, config.gains);
      u1 = out.u1;
      cstate = out.state;
    }

    const double u_raw = cmd.u_cmd + u1;
    const double u = compensate(cmd.u_cmd, u1, config.wheel_limit());
    const bool saturated = u != u_raw;
    const double theta = actuator.step(u);
    const double delta_f =
        std::clamp(theta / config.steering_ratio, -config.max_front_wheel, config.max_front_wheel);
    const double physical = actuator.physical_angle();

    SimStep record;
    record.t = t;
    record.vehicle = state;
    record.ref_x = proj.x;
    record.ref_y = proj.y;
    record.lateral_error = proj.signed_offset;
    record.u_cmd = cmd.u_cmd;
    record.u1 = u1;
    record.u = u;
    record.theta = theta;
    record.mode = cstate.mode;
    record.comp_active = comp;
    record.e_hat = e_hat;
    record.saturated = saturated;
    record.telemetry = detail::synthesize_frame(t, u, theta, state, delta_f, physical, config);
    log.steps.push_back(record);

    log.summary.max_abs_lateral_error =
        std::max(log.summary.max_abs_lateral_error, std::abs(proj.signed_offset));
    if (saturated) ++log.summary.saturation_count;

    state = bicycle_step(state, delta_f, config.speed, T, config.wheelbase);
    state.steer_wheel_meas = theta;
    window.push_back({u, record.telemetry.steer_torque, record.telemetry.vel_x});
    if (window_len > 0 && window.size() > window_len) window.pop_front();
  }

  log.summary.steps = log.steps.size();
  log.summary.duration = static_cast<double>(log.steps.size()) * T;
  return log;
}

/// Default scenario: the double-lane-change path from the config geometry.
inline SimLog run_simulation(const ScenarioConfig& config, const Ensemble* ensemble = nullptr) {
  const PathSpec path = double_lane_change_path(config.path_total_length, config.path_lane_offset,
                                                config.path_sections);
  Ensemble loaded;
  if (config.compensator_enabled && !ensemble) {
    if (config.model_path.empty()) throw ConfigError("compensator enabled but no model path set");
    loaded = load_ensemble(config.model_path);
    ensemble = &loaded;
  }
  return run_simulation_on_path(config, path, ensemble);
}

// ---------------------------------------------------------------------------
// Training-corpus generation
// ---------------------------------------------------------------------------

namespace detail {

/// Open-loop frequency sweep of the steering command through the actuator.
inline std::vector<TelemetryFrame> run_chirp(const ScenarioConfig& config, double f_start,
                                             double f_end, double duration, std::uint64_t seed,
                                             double amplitude = 2.0) {
  const double T = config.sample_period;
  ActuatorParams ap = config.actuator_params();
  ap.rng_seed = seed;
  Actuator actuator(ap);
  VehicleState state;
  state.speed = config.speed;
  std::vector<TelemetryFrame> frames;
  const auto steps = static_cast<std::size_t>(std::llround(duration / T));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * T;
    const double phase = f_start * t + (f_end - f_start) * t * t / (2.0 * duration);
    const double u = amplitude * std::sin(2.0 * kPi * phase);
    const double theta = actuator.step(u);
    const double delta_f =
        std::clamp(theta / config.steering_ratio, -config.max_front_wheel, config.max_front_wheel);
    const double physical = actuator.physical_angle();
    frames.push_back(synthesize_frame(t, u, theta, state, delta_f, physical, config));
    state = bicycle_step(state, delta_f, config.speed, T, config.wheelbase);
  }
  return frames;
}

inline std::vector<TelemetryFrame> run_path_telemetry(const ScenarioConfig& config,
                                                      const PathSpec& path, std::uint64_t seed) {
  ScenarioConfig open_loop = config;
  open_loop.compensator_enabled = false;
  open_loop.seed = seed;
  open_loop.duration = 0.0;
  const SimLog log = run_simulation_on_path(open_loop, path, nullptr);
  std::vector<TelemetryFrame> frames;
  frames.reserve(log.steps.size());
  for (const auto& s : log.steps) frames.push_back(s.telemetry);
  return frames;
}

}  // namespace detail

/// Generates a telemetry log for predictor training. Excitations:
///   chirp_steer - open-loop frequency sweep of the wheel command
///   dlc         - path-tracked double lane change, compensator off
///   u_turn      - path-tracked U-turn, compensator off
///   mixed       - chirp up, dlc, u_turn, chirp down (>= 6000 samples)
inline TelemetryLog simulate_training_log(const ScenarioConfig& config,
                                          const std::string& excitation) {
  config.validate();
  const double T = config.sample_period;
  std::vector<std::vector<TelemetryFrame>> segments;
  if (excitation == "chirp_steer") {
    segments.push_back(detail::run_chirp(config, 0.10, 0.45, 160.0, config.seed));
  } else if (excitation == "dlc") {
    const PathSpec path = double_lane_change_path(config.path_total_length,
                                                  config.path_lane_offset, config.path_sections);
    segments.push_back(detail::run_path_telemetry(config, path, config.seed));
  } else if (excitation == "u_turn") {
    segments.push_back(detail::run_path_telemetry(config, u_turn_path(), config.seed));
  } else if (excitation == "mixed") {
    segments.push_back(detail::run_chirp(config, 0.10, 0.45, 160.0, config.seed));
    const PathSpec dlc = double_lane_change_path(config.path_total_length,
                                                 config.path_lane_offset, config.path_sections);
    segments.push_back(detail::run_path_telemetry(config, dlc, config.seed + 1));
    segments.push_back(detail::run_path_telemetry(config, u_turn_path(), config.seed + 2));
    segments.push_back(detail::run_chirp(config, 0.40, 0.12, 140.0, config.seed + 3));
  } else {
    throw ContractError("simulate_training_log: unknown excitation '" + excitation + "'");
  }

  TelemetryLog log;
  log.sample_period = T;
  std::size_t k = 0;
  for (const auto& segment : segments) {
    for (TelemetryFrame frame : segment) {
      frame.t = static_cast<double>(k) * T;  // continuous global clock
      log.frames.push_back(frame);
      ++k;
    }
  }
  return log;
}

/// Offline calibration: finds the actuator noise level at which the
/// best-shift residual of a 0.5 Hz, 0.3 rad sine equals target_ratio of the
/// zero-shift RMSE. The returned value backs kDefaultActuatorNoiseStd.
inline double calibrate_noise_std(double target_ratio = 0.287, std::size_t steps = 10000,
                                  std::uint64_t seed = 9001) {
  const double T = 0.05;
  Vector cmd(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    cmd[k] = 0.3 * std::sin(2.0 * kPi * 0.5 * static_cast<double>(k) * T);
  }
  auto ratio_for = [&](double sigma) {
    ActuatorParams params;
    params.delay_steps = 4;
    params.noise_std = sigma;
    params.rng_seed = seed;
    Actuator actuator(params);
    Vector meas(steps);
    for (std::size_t k = 0; k < steps; ++k) meas[k] = actuator.step(cmd[k]);
    const DelayScan scan = estimate_delay(cmd, meas, 0.4, T, T);
    return scan.best_rmse / scan.rmse_at_zero;
  };
  double lo = 1e-4, hi = 0.5;
  for (int iter = 0; iter < 60; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (ratio_for(mid) < target_ratio ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// SimLog CSV (telemetry schema plus closed-loop columns)
// ---------------------------------------------------------------------------

inline void write_sim_csv(const SimLog& log, std::ostream& out) {
  if (log.steps.empty()) throw ContractError("cannot export an empty sim log");
  std::string buf;
  const auto& cols = telemetry_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) buf += ',';
    buf += cols[i];
  }
  buf += ",lateral_error,u_cmd,u1,u,mode,e_hat\n";
  for (const auto& step : log.steps) {
    bool first = true;
    for (const auto& f : detail::field_table()) {
      if (!first) buf += ',';
      first = false;
      const double v = step.telemetry.*(f.member);
      if (f.optional && is_missing(v)) continue;
      detail::format_value(buf, v);
    }
    buf += ',';
    detail::format_value(buf, step.lateral_error);
    buf += ',';
    detail::format_value(buf, step.u_cmd);
    buf += ',';
    detail::format_value(buf, step.u1);
    buf += ',';
    detail::format_value(buf, step.u);
    buf += ',';
    buf += step.comp_active ? to_string(step.mode) : "-";
    buf += ',';
    detail::format_value(buf, step.e_hat);
    buf += '\n';
  }
  out << buf;
  if (!out) throw IoError("sim CSV write failed");
}

inline void export_sim_csv(const SimLog& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_sim_csv(log, out);
}

/// Column series read back from an exported sim CSV (used by `compare`).
struct SimSeries {
  Vector t, theta, lateral_error, u_cmd, u1, u, e_hat;
  std::vector<std::string> mode;
};

inline SimSeries load_sim_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  const auto header = detail::split_csv_line(line);
  auto column = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (detail::trim(header[i]) == name) return i;
    }
    throw SchemaError(path + ": missing required column " + name);
  };
  const std::size_t c_t = column("t"), c_theta = column("steer_meas");
  const std::size_t c_lat = column("lateral_error"), c_ucmd = column("u_cmd");
  const std::size_t c_u1 = column("u1"), c_u = column("u");
  const std::size_t c_mode = column("mode"), c_ehat = column("e_hat");

  SimSeries series;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    auto cell = [&](std::size_t c) {
      if (c >= cells.size()) throw DataError(path + ": row " + std::to_string(row) + " too short");
      return detail::parse_cell(cells[c], row, header[c]);
    };
    series.t.push_back(cell(c_t));
    series.theta.push_back(cell(c_theta));
    series.lateral_error.push_back(cell(c_lat));
    series.u_cmd.push_back(cell(c_ucmd));
    series.u1.push_back(cell(c_u1));
    series.u.push_back(cell(c_u));
    series.e_hat.push_back(cell(c_ehat));
    series.mode.push_back(detail::trim(cells[c_mode]));
  }
  if (series.t.empty()) throw InsufficientDataError(path + ": no data rows");
  return series;
}

}  // namespace steercomp
