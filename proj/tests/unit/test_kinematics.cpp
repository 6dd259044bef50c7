#include <doctest.h>

#include "bmi/error.hpp"
#include "bmi/kinematics.hpp"

#include <cmath>

using namespace bmi;

namespace {

VehicleParams unit_vehicle(double vf = 1.0, double vr = 1.0) { return {vf, vr, 0.35}; }

// Closed-form pose after T seconds of constant commands.
Pose exact_arc(const Pose& p0, double v, double w, double T) {
  if (w == 0.0) return {p0.x + v * T * std::cos(p0.theta), p0.y + v * T * std::sin(p0.theta), p0.theta};
  const double th = p0.theta + w * T;
  return {p0.x + v / w * (std::sin(th) - std::sin(p0.theta)), p0.y - v / w * (std::cos(th) - std::cos(p0.theta)),
          normalize_angle(th)};
}

double final_error(double dt) {
  const VehicleParams vp = unit_vehicle(1.0, 1.0);
  Pose p{0.0, 0.0, 0.3};
  const int steps = static_cast<int>(std::lround(2.0 / dt));
  for (int k = 0; k < steps; ++k) p = step_pose(p, 0.9, 0.6, vp, dt);
  const Pose e = exact_arc({0.0, 0.0, 0.3}, 0.9, 0.6, 2.0);
  return std::hypot(p.x - e.x, p.y - e.y);
}

}  // namespace

TEST_CASE("zero input leaves the pose unchanged") {
  const Pose p{1.5, -2.0, 0.7};
  CHECK(step_pose(p, 0.0, 0.0, unit_vehicle(), 0.02) == p);
}

TEST_CASE("straight motion along x") {
  const Pose q = step_pose(Pose{0, 0, 0}, 1.0, 0.0, unit_vehicle(), 0.1);
  CHECK(std::abs(q.x - 0.1) <= 1e-12);
  CHECK(std::abs(q.y) <= 1e-12);
  CHECK(q.theta == 0.0);
}

TEST_CASE("straight motion in a rotated frame") {
  const double half_pi = std::acos(-1.0) / 2;
  const Pose q = step_pose(Pose{0, 0, half_pi}, 1.0, 0.0, unit_vehicle(), 0.1);
  CHECK(std::abs(q.x) <= 1e-12);
  CHECK(std::abs(q.y - 0.1) <= 1e-12);
  CHECK(std::abs(q.theta - half_pi) <= 1e-12);
}

TEST_CASE("pure rotation advances heading by a quarter turn and keeps position") {
  const double pi = std::acos(-1.0);
  const Pose p{2.0, 3.0, 0.0};
  const Pose q = step_pose(p, 0.0, 1.0, unit_vehicle(1.0, pi), 0.5);
  CHECK(q.x == p.x);
  CHECK(q.y == p.y);
  CHECK(std::abs(q.theta - pi / 2) <= 1e-12);
}

TEST_CASE("translation uses the heading from before the step") {
  const Pose q = step_pose(Pose{0, 0, 0}, 1.0, 1.0, unit_vehicle(1.0, 1.0), 0.5);
  CHECK(q.x == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(q.y == 0.0);
  CHECK(q.theta == doctest::Approx(0.5));
}

TEST_CASE("heading stays in (-pi, pi]") {
  const double pi = std::acos(-1.0);
  CHECK(normalize_angle(pi) == doctest::Approx(pi));
  CHECK(normalize_angle(-pi) == doctest::Approx(pi));
  CHECK(normalize_angle(3 * pi / 2) == doctest::Approx(-pi / 2));
  Pose p{0, 0, 3.0};
  for (int k = 0; k < 1000; ++k) {
    p = step_pose(p, 0.3, 1.0, unit_vehicle(1.0, 5.0), 0.037);
    REQUIRE(p.theta > -pi);
    REQUIRE(p.theta <= pi);
  }
}

TEST_CASE("preconditions are enforced") {
  CHECK_THROWS_AS(step_pose(Pose{}, 0.0, 0.0, unit_vehicle(), 0.0), ValidationError);
  CHECK_THROWS_AS(step_pose(Pose{}, 1.2, 0.0, unit_vehicle(), 0.1), ValidationError);
  CHECK_THROWS_AS(step_pose(Pose{}, 0.0, -1.01, unit_vehicle(), 0.1), ValidationError);
  CHECK_THROWS_AS(VehicleParams({0.0, 1.0, 0.3}).validate(), ValidationError);
  CHECK_THROWS_AS(VehicleParams({1.0, 1.0, -0.1}).validate(), ValidationError);
}

TEST_CASE("reverse motion is symmetric") {
  const Pose f = step_pose(Pose{0, 0, 0.4}, 0.5, 0.0, unit_vehicle(), 0.2);
  const Pose b = step_pose(Pose{0, 0, 0.4}, -0.5, 0.0, unit_vehicle(), 0.2);
  CHECK(f.x == doctest::Approx(-b.x));
  CHECK(f.y == doctest::Approx(-b.y));
}

TEST_CASE("straight-line arc length equals the sum of |v| dt") {
  const VehicleParams vp = unit_vehicle(0.8, 1.0);
  Pose p{0, 0, 0.9};
  double expected = 0.0, travelled = 0.0;
  for (int k = 0; k < 500; ++k) {
    const double u1 = std::sin(0.05 * k);
    const Pose q = step_pose(p, u1, 0.0, vp, 0.02);
    travelled += std::hypot(q.x - p.x, q.y - p.y);
    expected += std::abs(u1) * vp.max_forward_velocity * 0.02;
    p = q;
  }
  CHECK(travelled == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("forward Euler converges at first order") {
  const double e1 = final_error(0.04), e2 = final_error(0.02), e3 = final_error(0.01);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("long-double instantiation agrees with double") {
  const BasicPose<long double> p{0.0L, 0.0L, 0.25L};
  const BasicVehicleParams<long double> vp{1.0L, 1.0L, 0.35L};
  const auto q = step_pose(p, 0.5L, 0.5L, vp, 0.1L);
  const Pose qd = step_pose(Pose{0, 0, 0.25}, 0.5, 0.5, unit_vehicle(), 0.1);
  CHECK(static_cast<double>(q.x) == doctest::Approx(qd.x).epsilon(1e-15));
  CHECK(static_cast<double>(q.theta) == doctest::Approx(qd.theta).epsilon(1e-15));
}
