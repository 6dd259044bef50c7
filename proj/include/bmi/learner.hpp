#pragma once

// Scripted learner: a deterministic stand-in for a practising trainee.
//
// The learner watches the chair and steers toward a look-ahead point on the
// prescribed path (pure pursuit), expressing its intent through the
// four-gesture vocabulary: one elbow flexion to reach cruising speed, and
// shoulder protraction ramps to turn, released and restarted whenever the
// joint reaches full protraction. Its motor
// execution lags its intent by a reaction delay that scales with sigma; the
// per-seed delay pattern is fixed, so shrinking sigma across trials models a
// trainee whose timing tightens with practice.

#include "bmi/trial.hpp"

#include <deque>
#include <random>
#include <span>
#include <vector>

namespace bmi {

struct LearnerParams {
  double sigma = 0.1;          // gesture-timing noise scale, seconds
  double lookahead = 1.0;      // metres along the path
  double nominal_speed = 0.5;  // speed assumed when planning turns, m/s
  double turn_gain = 1.0;      // desired u2 per rad/s of planned turn rate
  double turn_onset = 0.22;    // protraction rate below which the chair does not turn
  double epoch = 0.5;          // seconds between reaction-delay redraws
  double accel_start = 0.2;    // elbow flexion onset, seconds
  double accel_duration = 1.2;
  double release_rate = 2.0;   // intensity per second when relaxing a joint
  double turn_deadband = 0.03;
};

class ScriptedLearner final : public GestureSource {
 public:
  ScriptedLearner(const World& world, LearnerParams params, std::uint64_t seed);

  GestureCommand command(double t, const Observation& obs) override;

  /// Reaction delay in force at time t.
  double delay(double t) const;

 private:
  double desired_turn(const Pose& pose) const;
  double intent_at(double t) const;

  Polylined path_;
  Eigen::VectorXd cum_;
  LearnerParams params_;
  std::vector<double> delay_pattern_;  // standard-normal draws, one per epoch
  std::deque<std::pair<double, double>> intents_;  // (t, desired u2)
  GestureIntensities motor_{};
  double last_t_ = 0.0;
  bool started_ = false;
};

struct LearningSuiteSettings {
  std::vector<double> sigmas = {1.0, 0.5, 0.25, 0.1};
  LearnerParams learner;
  TrialSettings trial;
};

/// One trial per sigma on the same world, in order.
std::vector<TrialRecord> run_learning_suite(const World& world, const VehicleParams& vehicle,
                                            const CalibrationModel& calibration, const PipelineConfig& pipeline,
                                            const SignalModelParams& signal, const LearningSuiteSettings& settings,
                                            std::uint64_t seed);

struct CurvePoint {
  std::string trial_id;
  double dist = 0.0;
  double e_diff = 0.0;
};

/// Per-trial (Dist, E_diff) in the given order. Throws ValidationError when
/// the records come from different worlds.
std::vector<CurvePoint> learning_curve(std::span<const TrialRecord> trials);

}  // namespace bmi
