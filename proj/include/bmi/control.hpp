#pragma once

// Rectified-derivative control pipeline.
//
// Each PC is differentiated, passed through a soft dead-zone and
// positive-rectified. The elbow difference is integrated into u1 (a persistent
// forward-speed fraction); the shoulder difference is emitted directly as u2.

#include "bmi/calibration.hpp"

#include <deque>

namespace bmi {

struct PipelineConfig {
  double dead_zone = 0.05;          // PC units per second
  std::size_t derivative_smoothing = 5;  // samples
  double u1_gain = 1.0;
  double u2_gain = 1.0;
  double u1_leak = 0.0;  // per second; 0 is a perfect integrator
  double clamp = 1.0;

  void validate() const;
};

/// max(0, d - dead_zone) for d = (h_curr - h_prev) / dt. Throws ValidationError if dt <= 0.
double rectified_derivative(double h_prev, double h_curr, double dt, double dead_zone);

struct ControlState {
  double u1 = 0.0;
  double u2 = 0.0;
  /// Last few (t, pc) samples; the newest is the previous step's input.
  std::deque<std::pair<double, PcVector>> history;

  // Diagnostics from the most recent step.
  PcVector rectified = PcVector::Zero();
  double a1 = 0.0;
  double u2_raw = 0.0;

  bool primed() const { return !history.empty(); }
  double last_t() const { return history.back().first; }
};

/// One pipeline update. Throws ValidationError on non-increasing timestamps
/// or non-finite PCs. The first call only primes the history.
ControlState step_controls(const ControlState& state, const PcVector& pc, double t,
                           const PipelineConfig& cfg);

/// Choose dead-zone and gains for a fitted calibration: the dead-zone sits
/// above the derivative noise floor and a full-intensity one-second gesture
/// ramp drives u1 to saturation in about one second.
PipelineConfig tune_pipeline(const CalibrationModel& model, const SignalModelParams& params,
                             PipelineConfig base = {});

}  // namespace bmi
