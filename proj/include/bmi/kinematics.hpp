#pragma once

// Unicycle wheelchair model, discretised with forward Euler:
//
//   x' = x + u1 Vf cos(theta) dt
//   y' = y + u1 Vf sin(theta) dt
//   theta' = theta + u2 Vr dt
//
// Translation uses the heading at the start of the step.

#include "bmi/error.hpp"
#include "bmi/geometry.hpp"

#include <cmath>

namespace bmi {

/// Wrap an angle into (-pi, pi].
template <typename Scalar>
Scalar normalize_angle(Scalar theta) {
  Scalar r = std::remainder(theta, Scalar(2) * kPi<Scalar>);
  if (r <= -kPi<Scalar>) r += Scalar(2) * kPi<Scalar>;
  return r;
}

template <typename Scalar>
struct BasicPose {
  Scalar x{0};
  Scalar y{0};
  Scalar theta{0};

  Vec2<Scalar> position() const { return {x, y}; }
  bool operator==(const BasicPose&) const = default;
};

template <typename Scalar>
struct BasicVehicleParams {
  Scalar max_forward_velocity{1};     // V_f, m/s
  Scalar max_rotational_velocity{1};  // V_r, rad/s
  Scalar body_radius{0.35};           // collision disc, m

  void validate() const {
    if (!(max_forward_velocity > Scalar(0))) throw ValidationError("V_f must be > 0");
    if (!(max_rotational_velocity > Scalar(0))) throw ValidationError("V_r must be > 0");
    if (!(body_radius >= Scalar(0))) throw ValidationError("body_radius must be >= 0");
  }
};

using Pose = BasicPose<double>;
using VehicleParams = BasicVehicleParams<double>;

/// Advance one step. Commands must lie in [-1, 1] and dt must be positive.
template <typename Scalar>
BasicPose<Scalar> step_pose(const BasicPose<Scalar>& p, Scalar u1, Scalar u2,
                            const BasicVehicleParams<Scalar>& vp, Scalar dt) {
  if (!(dt > Scalar(0))) throw ValidationError("step_pose requires dt > 0");
  if (!(std::abs(u1) <= Scalar(1)) || !(std::abs(u2) <= Scalar(1)))
    throw ValidationError("step_pose commands must lie in [-1, 1]");
  const Scalar ds = u1 * vp.max_forward_velocity * dt;
  const Scalar dtheta = u2 * vp.max_rotational_velocity * dt;
  BasicPose<Scalar> q;
  q.x = p.x + ds * std::cos(p.theta);
  q.y = p.y + ds * std::sin(p.theta);
  q.theta = normalize_angle(p.theta + dtheta);
  return q;
}

}  // namespace bmi
