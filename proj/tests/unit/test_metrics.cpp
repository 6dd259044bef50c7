#include <doctest.h>

#include "bmi/error.hpp"
#include "bmi/metrics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <cmath>
#include <random>

using namespace bmi;
using testgen::smooth_pair;
using testgen::transform;

namespace {

Polylined poly(std::initializer_list<std::array<double, 2>> pts) {
  Polylined p(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::Index i = 0;
  for (const auto& q : pts) p.row(i++) << q[0], q[1];
  return p;
}

oracle::Path to_path(const Polylined& p) {
  oracle::Path out;
  for (Eigen::Index i = 0; i < p.rows(); ++i) out.push_back({p(i, 0), p(i, 1)});
  return out;
}

Polylined random_polyline(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Polylined p(n, 2);
  for (int i = 0; i < n; ++i) p.row(i) << u(rng), u(rng);
  return p;
}

}  // namespace

TEST_CASE("path length examples") {
  CHECK(path_length(poly({{1, 1}})) == 0.0);
  CHECK(path_length(poly({{0, 0}, {3, 4}})) == 5.0);
}

TEST_CASE("path length matches a per-segment oracle on random polylines") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Polylined p = random_polyline(rng, 100, 50.0);
    const double ref = oracle::path_length(to_path(p));
    CHECK(std::abs(path_length(p) - ref) <= 1e-12 * ref);
  }
}

TEST_CASE("intersection examples") {
  CHECK(polyline_intersections(poly({{0, 0}, {5, 0}}), poly({{0, 1}, {5, 1}})).empty());
  const auto x = polyline_intersections(poly({{0, -1}, {0, 1}}), poly({{-1, 0}, {1, 0}}));
  REQUIRE(x.size() == 1);
  CHECK(x[0].point.norm() <= 1e-12);
  CHECK(x[0].t_a == doctest::Approx(0.5));
  CHECK(x[0].t_b == doctest::Approx(0.5));
  CHECK(x[0].kind == IntersectionKind::Crossing);
}

TEST_CASE("a crossing at a shared vertex is reported once") {
  // Both polylines have a vertex at the origin and cross there.
  const auto x = polyline_intersections(poly({{-1, -1}, {0, 0}, {1, 1}}), poly({{-1, 1}, {0, 0}, {1, -1}}));
  REQUIRE(x.size() == 1);
  CHECK(x[0].point.norm() <= 1e-12);
}

TEST_CASE("a tangential touch is not a crossing") {
  const auto x = polyline_intersections(poly({{-1, 1}, {0, 0}, {1, 1}}), poly({{-2, 0}, {2, 0}}));
  CHECK(x.empty());
}

TEST_CASE("collinear overlap yields an interval") {
  const auto x = polyline_intersections(poly({{0, 1}, {1, 0}, {3, 0}, {4, -1}}), poly({{0, 0}, {4, 0}}));
  REQUIRE(x.size() == 2);
  CHECK(x[0].kind == IntersectionKind::OverlapStart);
  CHECK(x[1].kind == IntersectionKind::OverlapEnd);
  CHECK((x[0].point - Vec2d(1, 0)).norm() <= 1e-12);
  CHECK((x[1].point - Vec2d(3, 0)).norm() <= 1e-12);
}

TEST_CASE("random polylines: crossings match the all-pairs oracle, ordered along a") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Polylined a = random_polyline(rng, 12, 10.0), b = random_polyline(rng, 9, 10.0);
    const auto lib = polyline_intersections(a, b);
    const auto ref = oracle::all_pairs_intersections(to_path(a), to_path(b));
    REQUIRE(lib.size() == ref.size());
    for (const auto& r : ref) {
      const bool found = std::any_of(lib.begin(), lib.end(), [&](const auto& x) {
        return std::hypot(x.point.x() - r[0], x.point.y() - r[1]) <= 1e-9;
      });
      CHECK(found);
    }
    for (std::size_t k = 1; k < lib.size(); ++k) CHECK(lib[k - 1].s_a <= lib[k].s_a);
    for (const auto& x : lib) {
      CHECK(x.t_a >= 0.0);
      CHECK(x.t_a <= 1.0);
      CHECK(x.t_b >= 0.0);
      CHECK(x.t_b <= 1.0);
    }
  }
}

TEST_CASE("identical trajectories have zero area error") {
  const Polylined p = poly({{0, 0}, {4, 0}, {4, 3}, {8, 3}});
  const auto r = area_error(p, p);
  CHECK(r.e_diff == 0.0);
  CHECK(r.segments.empty());
  CHECK(r.dist == doctest::Approx(11.0));
}

TEST_CASE("rectangle detour encloses exactly 2") {
  const auto r = area_error(poly({{0, 0}, {4, 0}}), poly({{0, 0}, {1, 0}, {1, 1}, {3, 1}, {3, 0}, {4, 0}}));
  CHECK(r.e_diff == 2.0);
  REQUIRE(r.segments.size() == 1);
  CHECK(r.segments[0].area == 2.0);
  CHECK(r.dist == 6.0);
}

TEST_CASE("segments sum to e_diff and alternate sides on an S-curve") {
  Polylined act(201, 2);
  for (int k = 0; k <= 200; ++k) act.row(k) << 0.05 * k, std::sin(0.05 * k * kPi<double> / 5.0);
  const auto r = area_error(poly({{0, 0}, {10, 0}}), act);
  REQUIRE(r.segments.size() == 2);
  double sum = 0;
  for (const auto& s : r.segments) sum += s.area;
  CHECK(sum == doctest::Approx(r.e_diff).epsilon(1e-14));
  // Integral of |sin| over two half periods of length 5.
  CHECK(r.e_diff == doctest::Approx(20.0 / kPi<double>).epsilon(1e-3));
}

TEST_CASE("reparameterised copies measure zero") {
  const Polylined p = poly({{0, 0}, {4, 0}, {4, 3}, {8, 3}});
  // Same corners, extra vertices at uneven spacing along each leg.
  std::vector<Vec2d> pts;
  for (Eigen::Index i = 0; i + 1 < p.rows(); ++i)
    for (int k = 0; k < 7; ++k) {
      const double f = std::pow(k / 7.0, 1.7);
      pts.push_back(row_point(p, i) + f * (row_point(p, i + 1) - row_point(p, i)));
    }
  pts.push_back(row_point(p, p.rows() - 1));
  Polylined q(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t k = 0; k < pts.size(); ++k) q.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
  CHECK(area_error(p, q).e_diff < 1e-9);
}

TEST_CASE("a self-intersecting prescribed path is rejected") {
  const Polylined bow = poly({{0, 0}, {2, 2}, {2, 0}, {0, 2}});
  CHECK_THROWS_AS(area_error(bow, poly({{0, 0}, {1, 1}})), UnsupportedInputError);
  CHECK_THROWS_AS(area_error(poly({{0, 0}}), poly({{0, 0}, {1, 1}})), ValidationError);
}

TEST_CASE("random smooth deviations match scanline integration within 1%") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [pres, act] = smooth_pair(rng, trial % 2 == 0);
    const double lib = area_error(pres, act).e_diff;
    const double ref = oracle::area_between(to_path(pres), to_path(act), 1e-3);
    CAPTURE(trial);
    CHECK(std::abs(lib - ref) <= 0.01 * ref);
  }
}

TEST_CASE("rigid motion and scaling") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [pres, act] = smooth_pair(rng, false);
    const double base = area_error(pres, act).e_diff;
    const double rot = 0.3 + trial;
    const Vec2d shift(3.0 * trial - 7.0, 2.5);
    const double moved = area_error(transform(pres, rot, shift), transform(act, rot, shift)).e_diff;
    CHECK(std::abs(moved - base) <= 1e-9 * std::max(1.0, base));
    const double c = 0.5 + 0.4 * trial;
    const double scaled = area_error(transform(pres, 0.0, Vec2d::Zero(), c), transform(act, 0.0, Vec2d::Zero(), c)).e_diff;
    CHECK(std::abs(scaled - c * c * base) <= 1e-9 * std::max(1.0, c * c * base));
  }
}

TEST_CASE("swapping the curves preserves the area when endpoints are shared") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const auto [pres, act] = smooth_pair(rng, true);
    CHECK(area_error(act, pres).e_diff == doctest::Approx(area_error(pres, act).e_diff).epsilon(1e-9));
  }
}

TEST_CASE("an aborted trial closes its loop through the projected endpoint") {
  // Drives parallel at height 1 and stops halfway.
  const auto r = area_error(poly({{0, 0}, {10, 0}}), poly({{0, 0}, {0, 1}, {5, 1}}));
  CHECK(r.e_diff == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("float instantiation") {
  Polyline<float> p(2, 2), q(6, 2);
  p << 0, 0, 4, 0;
  q << 0, 0, 1, 0, 1, 1, 3, 1, 3, 0, 4, 0;
  CHECK(area_error(p, q, 1e-6f).e_diff == doctest::Approx(2.0f));
}
