#pragma once

// Random test-input generators shared by the unit tests and the acceptance run.

#include "bmi/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <random>
#include <utility>

namespace testgen {

using bmi::kPi;
using bmi::Polylined;
using bmi::Vec2d;

// Smooth x-monotone prescribed curve and a trajectory offset vertically by a
// smooth deviation; both stay simple curves.
inline std::pair<Polylined, Polylined> smooth_pair(std::mt19937_64& rng, bool pinned_ends) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double L = 10.0;
  std::array<double, 3> shape{};
  for (auto& a : shape) a = 1.5 * u(rng);
  std::array<double, 4> amp{};
  for (auto& a : amp) a = 0.35 * u(rng);
  const double off0 = pinned_ends ? 0.0 : 0.2 * u(rng), off1 = pinned_ends ? 0.0 : 0.2 * u(rng);
  auto centre = [&](double x) {
    return shape[0] * std::sin(0.5 * x / L * kPi<double>) + shape[1] * std::sin(1.3 * x / L * kPi<double>) +
           0.3 * shape[2] * x / L;
  };
  const int n_p = 150, n_a = 333;  // different vertex spacing on each curve
  Polylined pres(n_p, 2), act(n_a, 2);
  for (int k = 0; k < n_p; ++k) {
    const double x = L * k / (n_p - 1);
    pres.row(k) << x, centre(x);
  }
  for (int k = 0; k < n_a; ++k) {
    const double x = L * k / (n_a - 1);
    double off = off0 + (off1 - off0) * x / L;
    for (int m = 0; m < 4; ++m) off += amp[m] * std::sin((m + 1) * kPi<double> * x / L);
    act.row(k) << x, centre(x) + off;
  }
  return {pres, act};
}

inline Polylined transform(const Polylined& p, double rot, const Vec2d& t, double scale = 1.0) {
  Eigen::Matrix2d R;
  R << std::cos(rot), -std::sin(rot), std::sin(rot), std::cos(rot);
  Polylined out = (scale * p * R.transpose()).rowwise() + t.transpose();
  return out;
}

}  // namespace testgen
