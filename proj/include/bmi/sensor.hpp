#pragma once

// Sensor data model and synthetic shirt signal generator.
//
// The generator is a stand-in for the piezoresistive shirt. Each channel is
//
//   v_c(t) = baseline_c + drift_rate * t + sum_g gain_g,c * sat(lag_g(t)) + noise
//
// where lag_g is a first-order lag of gesture intensity g with time constant
// relaxation_time, and sat(x) = x / (1 + x).

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace bmi {

enum class JointGroup { RightShoulder = 0, LeftShoulder, RightElbow, LeftElbow, Other };

inline constexpr std::array<JointGroup, 4> kControlGroups = {
    JointGroup::RightShoulder, JointGroup::LeftShoulder, JointGroup::RightElbow,
    JointGroup::LeftElbow};

std::string_view to_string(JointGroup g);
JointGroup parse_joint_group(std::string_view name);

enum class Gesture { RightElbowFlex = 0, LeftElbowFlex, RightShoulderProtract, LeftShoulderProtract };

inline constexpr std::size_t kGestureCount = 4;
inline constexpr std::array<Gesture, kGestureCount> kGestures = {
    Gesture::RightElbowFlex, Gesture::LeftElbowFlex, Gesture::RightShoulderProtract,
    Gesture::LeftShoulderProtract};

std::string_view to_string(Gesture g);
/// Throws UnknownGestureError for names outside the four-movement vocabulary.
Gesture parse_gesture(std::string_view name);

/// The joint group whose sensors a gesture primarily deforms.
JointGroup primary_group(Gesture g);

struct ChannelLayout {
  std::size_t total_channels = 52;
  std::map<JointGroup, std::vector<std::size_t>> groups;

  const std::vector<std::size_t>& channels(JointGroup g) const;
  std::size_t largest_control_group() const;

  /// Throws ValidationError unless groups are disjoint, in range, and the
  /// four control groups are non-empty.
  void validate() const;

  /// 8 + 8 shoulder channels, 6 + 6 elbow channels, the rest unassigned.
  static ChannelLayout default_shirt();

  bool operator==(const ChannelLayout&) const = default;
};

struct SensorFrame {
  double t = 0.0;
  Eigen::VectorXd values;

  bool operator==(const SensorFrame& o) const {
    return t == o.t && values.size() == o.values.size() && (values.array() == o.values.array()).all();
  }
};

using GestureIntensities = std::array<double, kGestureCount>;

struct GestureCommand {
  double t = 0.0;
  GestureIntensities intensities{};

  double operator[](Gesture g) const { return intensities[static_cast<std::size_t>(g)]; }
  double& operator[](Gesture g) { return intensities[static_cast<std::size_t>(g)]; }

  /// Clamp every activation to [0, 1].
  GestureCommand clamped() const;
  /// True when every activation is finite and within [0, 1].
  bool valid() const;
};

struct SignalModelParams {
  double relaxation_time = 0.4;
  double drift_rate = 0.0005;
  double noise_std = 0.003;
  double sample_rate = 100.0;
  Eigen::VectorXd baseline;
  std::array<Eigen::VectorXd, kGestureCount> gain_per_gesture;

  std::size_t channels() const { return static_cast<std::size_t>(baseline.size()); }
  const Eigen::VectorXd& gain(Gesture g) const { return gain_per_gesture[static_cast<std::size_t>(g)]; }

  void validate() const;

  /// Deterministic non-negative gains with mild cross-talk between joints.
  static SignalModelParams defaults(const ChannelLayout& layout);
};

inline double saturate(double x) { return x / (1.0 + x); }

/// Stateful generator. One instance per stream; not shared across threads.
class SignalGenerator {
 public:
  SignalGenerator(SignalModelParams params, std::uint64_t seed);

  void reset(std::uint64_t seed);

  /// Advance the lag state to cmd.t and emit one frame. Commands must arrive
  /// with non-decreasing timestamps; unclamped activations are clamped.
  SensorFrame synthesize_frame(const GestureCommand& cmd);

  const SignalModelParams& params() const { return params_; }
  double lagged_activation(Gesture g) const { return lag_[static_cast<std::size_t>(g)]; }

 private:
  SignalModelParams params_;
  std::array<double, kGestureCount> lag_{};
  std::optional<double> last_t_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Piecewise-linear keyframed gesture timeline. Before the first keyframe the
/// first keyframe's activations hold; after the last, the last ones hold.
class GestureScript {
 public:
  GestureScript() = default;
  explicit GestureScript(std::vector<GestureCommand> keyframes);

  GestureCommand at(double t) const;
  double duration() const { return keys_.empty() ? 0.0 : keys_.back().t; }
  const std::vector<GestureCommand>& keyframes() const { return keys_; }
  bool empty() const { return keys_.empty(); }

 private:
  std::vector<GestureCommand> keys_;
};

/// Sample a script at the generator's sample rate over [0, duration].
std::vector<SensorFrame> synthesize(const GestureScript& script, const SignalModelParams& params,
                                    std::uint64_t seed, double duration);

/// Smooth random activity on all four gestures, used as the uninstructed
/// calibration movement. Each gesture alternates rest and random-depth
/// movements of random duration.
GestureScript uninstructed_movement_script(double duration, std::uint64_t seed);

GestureScript read_gesture_script(const std::string& path);
void write_gesture_script(const std::string& path, const GestureScript& script);

}  // namespace bmi
