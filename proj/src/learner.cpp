#include "bmi/learner.hpp"

#include "bmi/error.hpp"

#include <cmath>

namespace bmi {

ScriptedLearner::ScriptedLearner(const World& world, LearnerParams params, std::uint64_t seed)
    : path_(world.prescribed_path), cum_(cumulative_length(world.prescribed_path)), params_(params) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  delay_pattern_.resize(1024);
  for (double& z : delay_pattern_) z = normal(rng);
}

double ScriptedLearner::delay(double t) const {
  const auto k = static_cast<std::size_t>(std::max(0.0, t) / params_.epoch) % delay_pattern_.size();
  return params_.sigma * (0.75 + 0.5 * std::abs(delay_pattern_[k]));
}

double ScriptedLearner::desired_turn(const Pose& pose) const {
  const double s = project_onto_polyline<double>(pose.position(), path_);
  const Vec2d target = point_at_length<double>(path_, cum_, s + params_.lookahead);
  const Vec2d to = target - pose.position();
  const double dist = to.norm();
  if (dist < 1e-9) return 0.0;
  const double bearing = normalize_angle(std::atan2(to.y(), to.x()) - pose.theta);
  const double turn_rate = 2.0 * params_.nominal_speed * std::sin(bearing) / dist;
  return std::clamp(params_.turn_gain * turn_rate, -1.0, 1.0);
}

double ScriptedLearner::intent_at(double t) const {
  double u = 0.0;
  for (const auto& [ti, ui] : intents_) {
    if (ti > t) break;
    u = ui;
  }
  return u;
}

GestureCommand ScriptedLearner::command(double t, const Observation& obs) {
  const double dt = started_ ? t - last_t_ : 0.0;
  started_ = true;
  last_t_ = t;

  intents_.emplace_back(t, desired_turn(obs.pose));
  const double lag = delay(t);
  const double executed_t = t - lag;
  // Keep just enough history to answer the largest possible delay.
  const double keep = params_.sigma * 4.0 + 1.0;
  while (intents_.size() > 2 && intents_[1].first < t - keep) intents_.pop_front();

  GestureIntensities& m = motor_;
  auto relax = [&](Gesture g) {
    double& v = m[static_cast<std::size_t>(g)];
    v = std::max(0.0, v - params_.release_rate * dt);
  };

  // Forward speed: one full elbow flexion, timed like every other gesture.
  const double ta = executed_t - params_.accel_start;
  double& re = m[static_cast<std::size_t>(Gesture::RightElbowFlex)];
  if (ta >= 0.0 && ta <= params_.accel_duration) re = std::max(re, std::min(1.0, ta / params_.accel_duration));
  else relax(Gesture::RightElbowFlex);
  relax(Gesture::LeftElbowFlex);

  // Turning: ramp the shoulder on the turn side, faster for sharper turns,
  // snapping back to rest when the joint is fully protracted.
  const double turn = executed_t >= 0.0 ? intent_at(executed_t) : 0.0;
  const double onset = params_.turn_onset;
  auto ramp = [&](Gesture on, Gesture off, double rate) {
    double& v = m[static_cast<std::size_t>(on)];
    v += rate * dt;
    if (v >= 1.0) v = 0.0;
    relax(off);
  };
  const double rate = onset + (1.0 - onset) * std::abs(turn);
  if (turn > params_.turn_deadband) ramp(Gesture::RightShoulderProtract, Gesture::LeftShoulderProtract, rate);
  else if (turn < -params_.turn_deadband) ramp(Gesture::LeftShoulderProtract, Gesture::RightShoulderProtract, rate);
  else {
    relax(Gesture::RightShoulderProtract);
    relax(Gesture::LeftShoulderProtract);
  }

  GestureCommand c;
  c.t = t;
  c.intensities = m;
  return c.clamped();
}

std::vector<TrialRecord> run_learning_suite(const World& world, const VehicleParams& vehicle,
                                            const CalibrationModel& calibration, const PipelineConfig& pipeline,
                                            const SignalModelParams& signal, const LearningSuiteSettings& settings,
                                            std::uint64_t seed) {
  std::vector<TrialRecord> out;
  for (std::size_t i = 0; i < settings.sigmas.size(); ++i) {
    LearnerParams lp = settings.learner;
    lp.sigma = settings.sigmas[i];
    ScriptedLearner learner(world, lp, seed);
    GestureDriver driver(learner, signal, seed * 7919 + 17, calibration, pipeline);
    TrialRecord rec = run_trial(world, vehicle, driver, settings.trial);
    rec.trial_id = "seed" + std::to_string(seed) + "-trial" + std::to_string(i + 1);
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<CurvePoint> learning_curve(std::span<const TrialRecord> trials) {
  std::vector<CurvePoint> series;
  for (const auto& t : trials) {
    if (!series.empty() && t.world_id != trials.front().world_id)
      throw ValidationError("learning curve mixes worlds '" + trials.front().world_id + "' and '" + t.world_id +
                            "'");
    series.push_back({t.trial_id, t.metrics.dist, t.metrics.e_diff});
  }
  return series;
}

}  // namespace bmi
