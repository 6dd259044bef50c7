#pragma once

// Fixed-step trial loop: signals -> PCs -> controls -> unicycle step ->
// collision response, recorded tick by tick and scored at the end.

#include "bmi/calibration.hpp"
#include "bmi/control.hpp"
#include "bmi/kinematics.hpp"
#include "bmi/metrics.hpp"
#include "bmi/sensor.hpp"
#include "bmi/world.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bmi {

enum class CollisionMode { Stop, Slide };

std::string_view to_string(CollisionMode m);
CollisionMode parse_collision_mode(std::string_view name);

struct TrialSettings {
  double dt = 0.02;
  double timeout = 120.0;
  CollisionMode collision = CollisionMode::Stop;
  bool stop_at_goal = true;
};

struct TrajectorySample {
  double t = 0.0;
  Pose pose;
  double u1 = 0.0;
  double u2 = 0.0;
};

struct ContactEvent {
  double t = 0.0;
  std::size_t wall = 0;
  Vec2d point = Vec2d::Zero();
};

struct PcSample {
  double t = 0.0;
  PcVector h = PcVector::Zero();
};

struct TrialRecord {
  std::string trial_id;
  std::string world_id;
  std::string world_hash;
  std::string config;  // JSON snapshot of the session configuration
  std::string frames_hash;
  std::string pc_hash;
  std::vector<SensorFrame> frames;  // in memory only; the file stores frames_hash
  std::vector<PcSample> pcs;        // in memory only; the file stores pc_hash
  std::vector<TrajectorySample> trajectory;
  std::vector<ContactEvent> contacts;
  MetricReport metrics;
  std::string stop_reason;

  Polylined path() const;
};

/// What the loop observes about the simulated chair when it asks for input.
struct Observation {
  double t = 0.0;
  Pose pose;
  double u1 = 0.0;
  double u2 = 0.0;
};

/// Produces gesture intensities for each sensor sample. Open-loop scripts
/// ignore the observation; closed-loop sources (live users, the scripted
/// learner) react to it.
class GestureSource {
 public:
  virtual ~GestureSource() = default;
  virtual GestureCommand command(double t, const Observation& obs) = 0;
  virtual bool finished(double /*t*/) const { return false; }
};

class ScriptGestureSource final : public GestureSource {
 public:
  explicit ScriptGestureSource(GestureScript script, bool stop_at_end = true)
      : script_(std::move(script)), stop_at_end_(stop_at_end) {}
  GestureCommand command(double t, const Observation&) override { return script_.at(t); }
  bool finished(double t) const override { return stop_at_end_ && t >= script_.duration(); }

 private:
  GestureScript script_;
  bool stop_at_end_;
};

struct ControlSample {
  double t = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
};

/// Calibration projection plus the rectified-derivative pipeline, logging PCs.
class SignalChain {
 public:
  SignalChain(CalibrationModel model, PipelineConfig cfg);
  void consume(const SensorFrame& frame);
  const ControlState& state() const { return state_; }
  const std::vector<PcSample>& pcs() const { return pcs_; }
  const PipelineConfig& config() const { return cfg_; }

 private:
  CalibrationModel model_;
  PipelineConfig cfg_;
  ControlState state_;
  std::vector<PcSample> pcs_;
};

/// Supplies the commands in force at each tick.
class TrialDriver {
 public:
  virtual ~TrialDriver() = default;
  /// Consume every input with timestamp <= t and return (u1, u2) now.
  virtual ControlSample advance_to(const Observation& obs) = 0;
  virtual bool exhausted(double t) const = 0;
  virtual std::vector<SensorFrame> take_frames() { return {}; }
  virtual std::vector<PcSample> take_pcs() { return {}; }
};

/// Pre-computed (t, u1, u2) stream; the latest sample at or before t holds.
class ControlStreamDriver final : public TrialDriver {
 public:
  explicit ControlStreamDriver(std::vector<ControlSample> stream);
  ControlSample advance_to(const Observation& obs) override;
  bool exhausted(double t) const override;

 private:
  std::vector<ControlSample> stream_;
  std::size_t next_ = 0;
  ControlSample current_;
};

/// Replays recorded frames through calibration and pipeline.
class FrameReplayDriver final : public TrialDriver {
 public:
  FrameReplayDriver(std::span<const SensorFrame> frames, CalibrationModel model, PipelineConfig cfg);
  ControlSample advance_to(const Observation& obs) override;
  bool exhausted(double t) const override;
  std::vector<SensorFrame> take_frames() override;
  std::vector<PcSample> take_pcs() override;

 private:
  std::span<const SensorFrame> frames_;
  std::size_t next_ = 0;
  SignalChain chain_;
};

/// Synthesises frames from a gesture source at the sensor sample rate.
class GestureDriver final : public TrialDriver {
 public:
  GestureDriver(GestureSource& source, SignalModelParams params, std::uint64_t seed, CalibrationModel model,
                PipelineConfig cfg);
  ControlSample advance_to(const Observation& obs) override;
  bool exhausted(double t) const override;
  std::vector<SensorFrame> take_frames() override;
  std::vector<PcSample> take_pcs() override;

 private:
  GestureSource& source_;
  SignalGenerator generator_;
  double sample_rate_;
  std::uint64_t next_sample_ = 0;
  SignalChain chain_;
  std::vector<SensorFrame> frames_;
};

/// Per-tick hook, e.g. for telemetry. Called after each recorded sample.
using TickObserver = std::function<void(const TrajectorySample&)>;

/// Run one trial to the goal, the timeout, or the end of the driver's input.
TrialRecord run_trial(const World& world, const VehicleParams& vehicle, TrialDriver& driver,
                      const TrialSettings& settings, const TickObserver& on_tick = {});

/// Incremental form of run_trial, used by the live session host.
class TrialRunner {
 public:
  TrialRunner(World world, VehicleParams vehicle, TrialSettings settings);

  /// Record the initial sample. Must be called once before tick().
  const TrajectorySample& begin(TrialDriver& driver);
  /// Advance one step; returns false once the trial has ended.
  bool tick(TrialDriver& driver);
  bool done() const { return !stop_reason_.empty(); }
  const TrajectorySample& last() const { return record_.trajectory.back(); }

  /// Score and hand over the completed record.
  TrialRecord finish(TrialDriver& driver, std::string stop_reason = {});

 private:
  World world_;
  VehicleParams vehicle_;
  TrialSettings settings_;
  TrialRecord record_;
  std::uint64_t step_ = 0;
  std::string stop_reason_;
};

/// Header JSON line plus `t,x,y,theta,u1,u2` rows at 17 significant digits.
std::string format_trial(const TrialRecord& rec);
TrialRecord parse_trial(const std::string& text);
void write_trial(const std::string& path, const TrialRecord& rec);
TrialRecord read_trial(const std::string& path);

/// Recompute the report from a trajectory and world.
MetricReport score_trial(const TrialRecord& rec, const World& world);

std::string format_metric_report(const MetricReport& report);
/// Plot data: both polylines and the closed segment polygons.
std::string format_plot_data(const MetricReport& report, const Polylined& prescribed, const Polylined& actual);

std::string hash_pcs(std::span<const PcSample> pcs);

}  // namespace bmi
