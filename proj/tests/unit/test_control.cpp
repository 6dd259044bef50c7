#include <doctest.h>

#include "bmi/control.hpp"
#include "bmi/error.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace bmi;

namespace {

PcVector pcs(double rs, double ls, double re, double le) { return PcVector(rs, ls, re, le); }

PipelineConfig unit_config(double dz = 0.0) {
  PipelineConfig c;
  c.dead_zone = dz;
  c.u1_gain = 1.0;
  c.u2_gain = 1.0;
  return c;
}

// Run a stream of (t, pc) through the pipeline, returning every state.
std::vector<ControlState> run(const std::vector<std::pair<double, PcVector>>& stream, const PipelineConfig& cfg,
                              ControlState s = {}) {
  std::vector<ControlState> out;
  for (const auto& [t, pc] : stream) {
    s = step_controls(s, pc, t, cfg);
    out.push_back(s);
  }
  return out;
}

std::vector<std::pair<double, PcVector>> random_stream(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> step(0.0, 0.05);
  std::uniform_real_distribution<double> dt(0.002, 0.03);
  std::vector<std::pair<double, PcVector>> s;
  double t = 0.0;
  PcVector h = PcVector::Zero();
  for (std::size_t k = 0; k < n; ++k) {
    for (int i = 0; i < 4; ++i) h[i] += step(rng);
    s.emplace_back(t, h);
    t += dt(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("rectified derivative examples") {
  CHECK(rectified_derivative(0.7, 0.7, 0.01, 0.0) == 0.0);
  CHECK(rectified_derivative(1.0, 0.98, 0.01, 0.5) == 0.0);  // d = -2
  CHECK(rectified_derivative(0.0, 0.0005, 0.01, 0.01) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(rectified_derivative(0.0, 0.0001, 0.01, 0.01) == 0.0);
  CHECK_THROWS_AS(rectified_derivative(0.0, 1.0, 0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(rectified_derivative(0.0, 1.0, -0.01, 0.0), ValidationError);
}

TEST_CASE("constant PCs hold u1 and keep u2 at zero") {
  ControlState s;
  s.u1 = 0.5;
  std::vector<std::pair<double, PcVector>> stream;
  for (int k = 0; k < 50; ++k) stream.emplace_back(0.01 * k, pcs(0.3, -0.2, 1.0, 0.4));
  for (const auto& st : run(stream, unit_config(0.01), s)) {
    CHECK(st.u1 == 0.5);
    CHECK(st.u2 == 0.0);
  }
}

TEST_CASE("symmetric elbow ramps cancel") {
  std::vector<std::pair<double, PcVector>> stream;
  for (int k = 0; k <= 100; ++k) stream.emplace_back(0.01 * k, pcs(0, 0, 0.02 * k, 0.02 * k));
  const auto states = run(stream, unit_config());
  CHECK(states.back().u1 == 0.0);
  CHECK(states.back().a1 == 0.0);
}

TEST_CASE("one-second unit ramp saturates u1, matching a 1 kHz oracle") {
  std::vector<std::pair<double, PcVector>> stream;
  const int n = 1000;
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    stream.emplace_back(t, pcs(0, 0, t, 0));
  }
  const double lib = run(stream, unit_config()).back().u1;
  const double ref = oracle::integrate_u1_ramp(1.0, 1.0, 0.0, 1.0, 1000.0);
  CHECK(ref == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(lib == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("half-slope ramp reaches one half; dead-zone reduces the integral as the oracle predicts") {
  for (double dz : {0.0, 0.1, 0.3}) {
    std::vector<std::pair<double, PcVector>> stream;
    for (int k = 0; k <= 1000; ++k) {
      const double t = k / 1000.0;
      stream.emplace_back(t, pcs(0, 0, 0.5 * t, 0));
    }
    const double lib = run(stream, unit_config(dz)).back().u1;
    const double ref = oracle::integrate_u1_ramp(0.5, 1.0, dz, 1.0, 1000.0);
    CHECK(ref == doctest::Approx(std::max(0.0, 0.5 - dz)).epsilon(1e-9));
    CHECK(lib == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("shoulder difference drives u2 instantaneously") {
  std::vector<std::pair<double, PcVector>> stream;
  for (int k = 0; k <= 20; ++k) stream.emplace_back(0.01 * k, pcs(k < 10 ? 0.005 * k : 0.045, 0, 0, 0));
  const auto st = run(stream, unit_config());
  CHECK(st[8].u2 == doctest::Approx(0.5));
  CHECK(st.back().u2 == 0.0);
  CHECK(st.back().u1 == 0.0);
}

TEST_CASE("leak decays u1 geometrically when PCs are frozen") {
  PipelineConfig c = unit_config();
  c.u1_leak = 0.5;
  ControlState s;
  s.u1 = 0.8;
  std::vector<std::pair<double, PcVector>> stream;
  for (int k = 0; k <= 10; ++k) stream.emplace_back(0.1 * k, pcs(0.1, 0.2, 0.3, 0.4));
  const auto st = run(stream, c, s);
  for (std::size_t k = 1; k < st.size(); ++k) {
    CHECK(st[k].u1 == doctest::Approx(0.8 * std::pow(0.95, static_cast<double>(k))).epsilon(1e-12));
    CHECK(st[k].u2 == 0.0);
  }
}

TEST_CASE("timestamp and finiteness errors") {
  ControlState s = step_controls({}, pcs(0, 0, 0, 0), 1.0, unit_config());
  CHECK_THROWS_AS(step_controls(s, pcs(0, 0, 0, 0), 1.0, unit_config()), ValidationError);
  CHECK_THROWS_AS(step_controls(s, pcs(0, 0, 0, 0), 0.5, unit_config()), ValidationError);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(step_controls(s, pcs(0, nan, 0, 0), 1.1, unit_config()), ValidationError);
}

TEST_CASE("config validation") {
  PipelineConfig c;
  c.dead_zone = -0.1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.u2_gain = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.derivative_smoothing = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("random streams: clamp, antisymmetry and dead-zone monotonicity") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> gain(0.1, 30.0), dz(0.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto stream = random_stream(rng, 200);
    PipelineConfig c;
    c.u1_gain = gain(rng);
    c.u2_gain = gain(rng);
    c.dead_zone = dz(rng);
    c.derivative_smoothing = 1 + static_cast<std::size_t>(trial % 7);

    std::vector<std::pair<double, PcVector>> mirrored;
    for (const auto& [t, h] : stream) mirrored.emplace_back(t, pcs(h[1], h[0], h[3], h[2]));
    PipelineConfig wider = c;
    wider.dead_zone += 0.5;

    const auto a = run(stream, c), b = run(mirrored, c), w = run(stream, wider);
    for (std::size_t k = 0; k < a.size(); ++k) {
      REQUIRE(std::abs(a[k].u1) <= 1.0);
      REQUIRE(std::abs(a[k].u2) <= 1.0);
      REQUIRE(b[k].a1 == -a[k].a1);
      REQUIRE(b[k].u2_raw == -a[k].u2_raw);
      REQUIRE(std::abs(w[k].a1) <= std::abs(a[k].a1) + 1e-12);
      REQUIRE(std::abs(w[k].u2_raw) <= std::abs(a[k].u2_raw) + 1e-12);
    }
  }
}
