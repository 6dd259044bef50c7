#include <doctest.h>

#include "bmi/error.hpp"
#include "bmi/recording.hpp"
#include "bmi/trial.hpp"
#include "bmi/world.hpp"
#include "oracles.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <filesystem>
#include <random>

using namespace bmi;

namespace {

const VehicleParams kVehicle{0.5, 2.0, 0.35};

World open_world() {
  World w;
  w.id = "open";
  w.prescribed_path.resize(2, 2);
  w.prescribed_path << 0, 0, 100, 0;
  w.start = {0, 0, 0};
  w.goal_center = {1000, 1000};
  return w;
}

std::vector<std::pair<oracle::Pt, oracle::Pt>> oracle_walls(const World& w) {
  std::vector<std::pair<oracle::Pt, oracle::Pt>> out;
  for (const auto& s : w.walls) out.push_back({{s.a.x(), s.a.y()}, {s.b.x(), s.b.y()}});
  return out;
}

std::vector<ControlSample> random_controls(std::mt19937_64& rng, double duration, double period) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), fwd(0.2, 1.0);
  std::vector<ControlSample> out;
  for (double t = 0.0; t < duration; t += period) out.push_back({t, fwd(rng), u(rng)});
  return out;
}

TrialSettings settings(double timeout, CollisionMode mode = CollisionMode::Stop) {
  TrialSettings s;
  s.timeout = timeout;
  s.collision = mode;
  return s;
}

// Constant commands held until `until`.
std::vector<ControlSample> hold(double u1, double u2, double until) { return {{0.0, u1, u2}, {until, u1, u2}}; }

std::string data(const std::string& name) { return std::string(BMI_DATA_DIR) + "/" + name; }

}  // namespace

TEST_CASE("collision examples") {
  CHECK_FALSE(check_collision({0, 0, 0}, kVehicle, open_world()));
  World near = open_world();
  near.walls.push_back({{0.3, -1}, {0.3, 1}});
  VehicleParams half = kVehicle;
  half.body_radius = 0.5;
  const auto touching = check_collision({0, 0, 0}, half, near);
  REQUIRE(touching);
  CHECK(touching->wall == 0);
  CHECK(touching->distance == doctest::Approx(0.3));

  World w = open_world();
  w.walls.push_back({{-5, 1}, {5, 1}});
  VehicleParams vp = kVehicle;
  vp.body_radius = 0.5;
  CHECK_FALSE(check_collision({0, 0.4, 0}, vp, w));
  const auto hit = check_collision({0, 0.6, 0}, vp, w);
  REQUIRE(hit);
  CHECK(hit->wall == 0);
  CHECK(hit->distance == doctest::Approx(0.4));
  CHECK((hit->point - Vec2d(0, 1)).norm() <= 1e-12);
  // Beyond the wall's end the nearest point is the endpoint.
  CHECK_FALSE(check_collision({5.4, 1.0 - 0.4, 0}, vp, w));
  CHECK(check_collision({5.3, 1.0, 0}, vp, w));
}

TEST_CASE("collision checks agree with a brute-force oracle on random poses") {
  const World w = corridor_world();
  const auto walls = oracle_walls(w);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> x(-2.0, 18.0), y(-3.0, 9.0);
  int hits = 0;
  for (int k = 0; k < 1000; ++k) {
    const Pose p{x(rng), y(rng), 0.0};
    const auto lib = check_collision(p, kVehicle, w);
    const auto ref = oracle::first_contact({p.x, p.y}, kVehicle.body_radius, walls);
    REQUIRE(lib.has_value() == ref.has_value());
    if (lib) {
      CHECK(lib->wall == *ref);
      ++hits;
    }
  }
  CHECK(hits > 50);
}

TEST_CASE("world validation and file round trip") {
  const World w = corridor_world();
  CHECK_NOTHROW(w.validate(0.35));
  World bad = w;
  bad.start = {0.0, 1.3, 0.0};
  CHECK_THROWS_AS(bad.validate(0.35), ValidationError);
  bad = w;
  bad.prescribed_path.resize(1, 2);
  CHECK_THROWS_AS(bad.validate(0.35), ValidationError);

  const auto path = (std::filesystem::temp_directory_path() / "bmi_test.bworld").string();
  write_world(path, w);
  const World back = read_world(path);
  std::filesystem::remove(path);
  CHECK(back.id == w.id);
  CHECK(back.prescribed_path == w.prescribed_path);
  CHECK(back.walls.size() == w.walls.size());
  CHECK(world_hash(back) == world_hash(w));
  CHECK(world_hash(read_world(data("corridor.bworld"))) == world_hash(w));
  CHECK_THROWS_AS(parse_world("{}"), FormatError);
}

TEST_CASE("a control stream ends after its last sample") {
  ControlStreamDriver driver({{0.0, 1.0, 0.0}});
  const TrialRecord r = run_trial(open_world(), kVehicle, driver, settings(60));
  CHECK(r.stop_reason == "stream_end");
  CHECK(r.trajectory.size() == 1);
}

TEST_CASE("zero input holds the start pose") {
  ControlStreamDriver driver({{0.0, 0.0, 0.0}, {5.0, 0.0, 0.0}});
  const TrialRecord r = run_trial(open_world(), kVehicle, driver, settings(60));
  CHECK(r.stop_reason == "stream_end");
  for (const auto& s : r.trajectory) CHECK(s.pose == open_world().start);
  CHECK(r.metrics.dist == 0.0);
  CHECK(r.metrics.e_diff == 0.0);
}

TEST_CASE("full forward for T seconds covers V_f * T along the path") {
  ControlStreamDriver driver(hold(1.0, 0.0, 100.0));
  const TrialRecord r = run_trial(open_world(), kVehicle, driver, settings(10.0));
  CHECK(r.stop_reason == "timeout");
  CHECK(r.trajectory.back().t == doctest::Approx(10.0));
  CHECK(r.trajectory.back().pose.x == doctest::Approx(0.5 * 10.0).epsilon(1e-12));
  CHECK(r.metrics.dist == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(r.metrics.e_diff <= 1e-12);
}

TEST_CASE("reaching the goal stops the trial") {
  World w = open_world();
  w.goal_center = {3.0, 0.0};
  w.goal_radius = 0.5;
  ControlStreamDriver driver(hold(1.0, 0.0, 100.0));
  const TrialRecord r = run_trial(w, kVehicle, driver, settings(60));
  CHECK(r.stop_reason == "goal");
  // Stops on the first tick inside the goal disc.
  const auto n = r.trajectory.size();
  CHECK(w.at_goal(r.trajectory[n - 1].pose));
  CHECK_FALSE(w.at_goal(r.trajectory[n - 2].pose));
}

TEST_CASE("stop mode never lets the chair penetrate a wall") {
  const World w = corridor_world();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    ControlStreamDriver driver(random_controls(rng, 40.0, 0.7));
    const TrialRecord r = run_trial(w, kVehicle, driver, settings(40.0));
    for (const auto& s : r.trajectory)
      for (const auto& wall : w.walls)
        REQUIRE(point_segment_distance(s.pose.position(), wall.a, wall.b) >= kVehicle.body_radius - 1e-9);
    for (std::size_t k = 1; k < r.trajectory.size(); ++k) {
      // Contacts at tick k leave the position unchanged.
      const bool contacted = std::any_of(r.contacts.begin(), r.contacts.end(),
                                         [&](const auto& c) { return c.t == r.trajectory[k].t; });
      if (contacted) CHECK(r.trajectory[k].pose.position() == r.trajectory[k - 1].pose.position());
    }
  }
}

TEST_CASE("slide mode keeps the tangential motion") {
  World w = open_world();
  w.walls.push_back({{-10, 1}, {50, 1}});
  w.start = {0, 1 - kVehicle.body_radius - 0.01, 0.5};
  ControlStreamDriver driver(hold(1.0, 0.0, 100.0));
  const TrialRecord slide = run_trial(w, kVehicle, driver, settings(4.0, CollisionMode::Slide));
  ControlStreamDriver driver2(hold(1.0, 0.0, 100.0));
  const TrialRecord stop = run_trial(w, kVehicle, driver2, settings(4.0, CollisionMode::Stop));
  CHECK_FALSE(slide.contacts.empty());
  CHECK(slide.trajectory.back().pose.x > stop.trajectory.back().pose.x + 1.0);
  for (const auto& s : slide.trajectory) CHECK(s.pose.y < 1 - kVehicle.body_radius + 1e-9);
}

TEST_CASE("rigidly moving the world moves the trajectory and keeps the metrics") {
  std::mt19937_64 rng(12);
  const auto controls = random_controls(rng, 20.0, 0.5);
  const World w = corridor_world();
  const double rot = 0.8;
  const Vec2d shift(-4.0, 11.0);
  const World moved = transformed(w, rot, shift);
  ControlStreamDriver a(controls), b(controls);
  const TrialRecord ra = run_trial(w, kVehicle, a, settings(20.0));
  const TrialRecord rb = run_trial(moved, kVehicle, b, settings(20.0));
  REQUIRE(ra.trajectory.size() == rb.trajectory.size());
  const Eigen::Rotation2Dd R(rot);
  for (std::size_t k = 0; k < ra.trajectory.size(); ++k) {
    const Vec2d expect = R * ra.trajectory[k].pose.position() + shift;
    REQUIRE((rb.trajectory[k].pose.position() - expect).norm() <= 1e-9);
  }
  CHECK(rb.metrics.dist == doctest::Approx(ra.metrics.dist).epsilon(1e-9));
  CHECK(std::abs(rb.metrics.e_diff - ra.metrics.e_diff) <= 1e-9 * std::max(1.0, ra.metrics.e_diff));
}

TEST_CASE("replaying a recording is deterministic and the file round trips") {
  const Recording rec = read_recording(data("drive_demo.bsr"));
  const CalibrationModel cal = read_calibration(data("uninstructed.bcal"));
  const World w = read_world(data("corridor.bworld"));
  const PipelineConfig cfg = tune_pipeline(cal, SignalModelParams::defaults(cal.layout));
  FrameReplayDriver d1(rec.frames, cal, cfg), d2(rec.frames, cal, cfg);
  TrialRecord r1 = run_trial(w, kVehicle, d1, settings(120));
  TrialRecord r2 = run_trial(w, kVehicle, d2, settings(120));
  CHECK(format_trial(r1) == format_trial(r2));
  CHECK(r1.frames_hash == hash_frames(rec.frames));
  CHECK(r1.metrics.dist > 1.0);

  const auto path = (std::filesystem::temp_directory_path() / "bmi_test.btrial").string();
  write_trial(path, r1);
  const TrialRecord back = read_trial(path);
  std::filesystem::remove(path);
  CHECK(format_trial(back) == format_trial(r1));
  const MetricReport again = score_trial(back, w);
  CHECK(again.dist == r1.metrics.dist);
  CHECK(again.e_diff == r1.metrics.e_diff);
}

TEST_CASE("trial file errors") {
  CHECK_THROWS_AS(parse_trial(""), FormatError);
  CHECK_THROWS_AS(parse_trial("{\"format\":\"bsr\"}\n"), FormatError);
  ControlStreamDriver driver(hold(1.0, 0.0, 100.0));
  const std::string good = format_trial(run_trial(open_world(), kVehicle, driver, settings(0.1)));
  CHECK_THROWS_AS(parse_trial(good + "0,0,0,0,0\n"), FormatError);
  CHECK_THROWS_AS(parse_trial(good + "0,0,0,0,0,0\n"), NonMonotonicTimestampError);
}

TEST_CASE("the tick observer sees every recorded sample") {
  ControlStreamDriver driver(hold(0.5, 0.2, 100.0));
  std::size_t seen = 0;
  double last_t = -1.0;
  const TrialRecord r = run_trial(open_world(), kVehicle, driver, settings(1.0), [&](const TrajectorySample& s) {
    if (s.t != last_t) ++seen;
    last_t = s.t;
  });
  CHECK(seen == r.trajectory.size());
  CHECK(r.trajectory.size() == 51);
}
