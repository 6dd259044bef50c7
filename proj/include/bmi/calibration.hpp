#pragma once

// Per-joint-group PCA calibration. Each control group keeps only its first
// principal component; live frames are projected onto the four retained axes
// to give (h_rs, h_ls, h_re, h_le).

#include "bmi/sensor.hpp"

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string>

namespace bmi {

/// Principal-component readings in control-group order (h_rs, h_ls, h_re, h_le).
using PcVector = Eigen::Vector4d;

struct TimeWindow {
  double t0 = 0.0;
  double t1 = 0.0;
  bool contains(double t) const { return t >= t0 && t <= t1; }
};

enum class SignConvention {
  ReferenceGesture,  // projection is positive on average over the reference segment
  FirstComponent,    // first axis component is non-negative
};

struct GroupCalibration {
  JointGroup group = JointGroup::RightShoulder;
  std::vector<std::size_t> channels;
  Eigen::VectorXd mean;
  Eigen::VectorXd axis;         // unit L2 norm
  Eigen::VectorXd eigenvalues;  // descending
  double explained_variance_ratio = 0.0;
  SignConvention sign = SignConvention::FirstComponent;
  bool unstable = false;  // top eigenvalue gap below the degeneracy threshold
};

struct CalibrationModel {
  ChannelLayout layout;
  std::array<GroupCalibration, 4> groups;
  std::string source_hash;
  TimeWindow window;

  const GroupCalibration& group(JointGroup g) const;
  bool unstable() const;
};

struct FitOptions {
  /// Optional per-group segments where the group's own gesture is performed,
  /// indexed like kControlGroups.
  std::array<std::optional<TimeWindow>, 4> reference{};
  /// Relative eigen-gap (of the trace) below which a group is flagged unstable.
  double degeneracy_gap = 1e-9;
};

/// First principal component of each control group over frames inside the
/// window. Throws WindowTooShortError when the window has fewer than
/// 2 x (largest group size) frames, DegenerateCalibrationError when a group's
/// signals are constant.
CalibrationModel fit_calibration(std::span<const SensorFrame> frames, const ChannelLayout& layout,
                                 const TimeWindow& window, const FitOptions& options = {});

/// Throws ValidationError on a frame length mismatch.
PcVector project(const Eigen::VectorXd& values, const CalibrationModel& model);
inline PcVector project(const SensorFrame& frame, const CalibrationModel& model) {
  return project(frame.values, model);
}

std::string format_calibration(const CalibrationModel& model);
CalibrationModel parse_calibration(const std::string& text);
void write_calibration(const std::string& path, const CalibrationModel& model);
CalibrationModel read_calibration(const std::string& path);

/// Content hash over frame timestamps and values.
std::string hash_frames(std::span<const SensorFrame> frames);

}  // namespace bmi
