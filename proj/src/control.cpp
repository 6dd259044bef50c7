#include "bmi/control.hpp"

#include "bmi/error.hpp"

#include <cmath>

namespace bmi {

void PipelineConfig::validate() const {
  if (!(dead_zone >= 0.0)) throw ValidationError("dead_zone must be >= 0");
  if (derivative_smoothing < 1) throw ValidationError("derivative_smoothing must be >= 1");
  if (!(u1_gain > 0.0) || !(u2_gain > 0.0)) throw ValidationError("gains must be > 0");
  if (!(u1_leak >= 0.0 && u1_leak <= 1.0)) throw ValidationError("u1_leak must lie in [0, 1]");
  if (!(clamp > 0.0 && clamp <= 1.0)) throw ValidationError("clamp bound must lie in (0, 1]");
}

double rectified_derivative(double h_prev, double h_curr, double dt, double dead_zone) {
  if (!(dt > 0.0)) throw ValidationError("rectified_derivative requires dt > 0");
  const double d = (h_curr - h_prev) / dt;
  return d > dead_zone ? d - dead_zone : 0.0;
}

ControlState step_controls(const ControlState& state, const PcVector& pc, double t,
                           const PipelineConfig& cfg) {
  if (!pc.allFinite()) throw ValidationError("non-finite principal component value");
  if (!std::isfinite(t)) throw ValidationError("non-finite timestamp");
  ControlState next = state;
  if (!state.primed()) {
    next.u2 = 0.0;
    next.rectified.setZero();
    next.a1 = next.u2_raw = 0.0;
    next.history.emplace_back(t, pc);
    return next;
  }
  if (!(t > state.last_t()))
    throw ValidationError("control pipeline timestamps must strictly increase");

  // Difference against the oldest retained sample: for uniform sampling this
  // equals the derivative of an N-sample moving average.
  const auto& [t_old, pc_old] = state.history.front();
  const double span = t - t_old;
  PcVector r;
  for (Eigen::Index i = 0; i < 4; ++i) r[i] = rectified_derivative(pc_old[i], pc[i], span, cfg.dead_zone);

  // PcVector order: rs, ls, re, le.
  const double a1 = r[2] - r[3];
  const double u2_raw = cfg.u2_gain * (r[0] - r[1]);
  const double dt = t - state.last_t();
  const double lim = cfg.clamp;
  next.u1 = std::clamp(state.u1 * (1.0 - cfg.u1_leak * dt) + cfg.u1_gain * a1 * dt, -lim, lim);
  next.u2 = std::clamp(u2_raw, -lim, lim);
  next.rectified = r;
  next.a1 = a1;
  next.u2_raw = u2_raw;

  next.history.emplace_back(t, pc);
  while (next.history.size() > cfg.derivative_smoothing) next.history.pop_front();
  return next;
}

PipelineConfig tune_pipeline(const CalibrationModel& model, const SignalModelParams& params,
                             PipelineConfig base) {
  base.validate();
  const std::size_t m = base.derivative_smoothing;
  const double window = static_cast<double>(m) / params.sample_rate;

  // Derivative noise floor: each PC is a unit-axis projection of i.i.d.
  // channel noise, so its std is noise_std; the windowed difference doubles
  // the variance.
  const double noise_floor = std::sqrt(2.0) * params.noise_std / window;
  double drift = 0.0;
  for (const auto& gc : model.groups) drift = std::max(drift, std::abs(params.drift_rate * gc.axis.sum()));
  base.dead_zone = 3.0 * noise_floor + 2.0 * drift;

  // Noise-free one-second full-intensity ramp for each gesture.
  SignalModelParams quiet = params;
  quiet.noise_std = 0.0;
  quiet.drift_rate = 0.0;
  auto rise_over_ramp = [&](Gesture g) {
    std::vector<GestureCommand> keys(2);
    keys[0].t = 0.0;
    keys[1].t = 1.0;
    keys[1][g] = 1.0;
    const auto frames = synthesize(GestureScript(keys), quiet, 0, 1.0);
    const auto gi = static_cast<Eigen::Index>(primary_group(g));
    return project(frames.back(), model)[gi] - project(frames.front(), model)[gi];
  };
  const double elbow = 0.5 * (rise_over_ramp(Gesture::RightElbowFlex) + rise_over_ramp(Gesture::LeftElbowFlex));
  const double shoulder =
      0.5 * (rise_over_ramp(Gesture::RightShoulderProtract) + rise_over_ramp(Gesture::LeftShoulderProtract));
  const double elbow_eff = elbow - base.dead_zone;
  const double shoulder_eff = shoulder - base.dead_zone;
  if (!(elbow_eff > 0.0) || !(shoulder_eff > 0.0))
    throw CalibrationError("gesture response does not clear the noise dead-zone");
  base.u1_gain = 1.0 / elbow_eff;
  base.u2_gain = 1.0 / shoulder_eff;
  return base;
}

}  // namespace bmi
