#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "steercomp/errors.hpp"

namespace steercomp {

enum class CompensatorMode { kPi, kPd };

inline const char* to_string(CompensatorMode mode) {
  return mode == CompensatorMode::kPi ? "PI" : "PD";
}

/// Gains for the yaw-rate scheduled PI/PD feedforward correction.
/// w0 is the scheduling threshold (2 deg/s); |yaw_rate| <= w0 selects PI.
struct CompensatorGains {
  double kp = 1.0;
  double ki = 0.1;    // 1/s
  double kd = 0.005;  // s
  double w0 = 2.0 * 3.14159265358979323846 / 180.0;  // rad/s
  double sample_period = 0.05;
  double output_limit = 1.0;  // rad, saturation on u1

  void validate() const {
    if (!(sample_period > 0.0)) throw ContractError("compensator: sample_period must be positive");
    if (!(w0 > 0.0)) throw ContractError("compensator: w0 must be positive");
    if (!(output_limit > 0.0)) throw ContractError("compensator: output_limit must be positive");
    if (kp < 0.0 || ki < 0.0 || kd < 0.0) throw ContractError("compensator: gains must be >= 0");
  }
};

/// Sequential controller memory: discrete integrator, previous predicted
/// error, and the mode chosen at the latest step.
struct CompensatorState {
  CompensatorMode mode = CompensatorMode::kPi;
  double integrator = 0.0;  // rad*s
  double prev_error = 0.0;  // rad
  bool initialized = false;
};

struct CompensatorOutput {
  double u1 = 0.0;
  CompensatorState state;
};

/// One step of the compensator.
///
/// PI branch (|yaw_rate| <= w0): backward-Euler integrator. When the
/// predicted error crosses zero (sign change, both values nonzero) the
/// integrator is cleared before the new sample is accumulated, so the
/// integral contribution of that step is exactly ki*T*e_hat.
/// PD branch: backward difference; the integrator is held, not accumulated.
/// On the first call prev_error is seeded with e_hat so the derivative term
/// starts at zero. The output saturates at +/-output_limit.
inline CompensatorOutput compensator_step(CompensatorState state, double e_hat, double yaw_rate,
                                          const CompensatorGains& gains) {
  if (!std::isfinite(e_hat) || !std::isfinite(yaw_rate)) {
    throw ContractError("compensator_step: non-finite input");
  }
  gains.validate();
  if (!state.initialized) {
    state.prev_error = e_hat;
    state.initialized = true;
  }

  const double T = gains.sample_period;
  double u1 = 0.0;
  if (std::abs(yaw_rate) <= gains.w0) {
    state.mode = CompensatorMode::kPi;
    const bool crossed = e_hat != 0.0 && state.prev_error != 0.0 &&
                         std::signbit(e_hat) != std::signbit(state.prev_error);
    if (crossed) state.integrator = 0.0;
    state.integrator += T * e_hat;
    u1 = gains.kp * e_hat + gains.ki * state.integrator;
  } else {
    state.mode = CompensatorMode::kPd;
    u1 = gains.kp * e_hat + gains.kd * (e_hat - state.prev_error) / T;
  }
  state.prev_error = e_hat;
  u1 = std::clamp(u1, -gains.output_limit, gains.output_limit);
  return {u1, state};
}

/// Adds the feedforward correction to the nominal command, clamped to the
/// actuator range.
inline double compensate(double u_cmd, double u1, double actuator_limit) {
  if (!std::isfinite(u_cmd) || !std::isfinite(u1)) {
    throw ContractError("compensate: non-finite input");
  }
  return std::clamp(u_cmd + u1, -actuator_limit, actuator_limit);
}

}  // namespace steercomp
