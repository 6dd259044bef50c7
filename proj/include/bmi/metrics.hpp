#pragma once

// Trial quality measures.
//
// Dist is the arc length of the driven trajectory. E_diff is the area enclosed
// between the prescribed path and the trajectory: both curves are cut at their
// crossing points and each piece (prescribed arc + reversed trajectory arc)
// is closed into a loop whose absolute shoelace area is summed. The
// trajectory's endpoints are projected onto the prescribed path to bound the
// comparison span, and the projection connectors close the first and last
// loops.

#include "bmi/error.hpp"
#include "bmi/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

namespace bmi {

enum class IntersectionKind {
  Crossing,      // sign-changing crossing
  OverlapStart,  // first point of a collinear shared stretch
  OverlapEnd,    // last point of a collinear shared stretch
};

template <typename Scalar>
struct Intersection {
  Vec2<Scalar> point = Vec2<Scalar>::Zero();
  Eigen::Index segment_a = 0;
  Scalar t_a{0};  // position within segment_a, in [0, 1]
  Eigen::Index segment_b = 0;
  Scalar t_b{0};
  Scalar s_a{0};  // arc length along a
  Scalar s_b{0};  // arc length along b
  IntersectionKind kind = IntersectionKind::Crossing;
};

template <typename Scalar>
struct AreaSegment {
  Vec2<Scalar> from = Vec2<Scalar>::Zero();
  Vec2<Scalar> to = Vec2<Scalar>::Zero();
  Scalar area{0};
  Polyline<Scalar> polygon;  // closed loop (implicit last edge)
};

template <typename Scalar>
struct BasicMetricReport {
  Scalar dist{0};
  Scalar e_diff{0};
  std::vector<AreaSegment<Scalar>> segments;
  std::vector<Vec2<Scalar>> intersection_points;
};

using MetricReport = BasicMetricReport<double>;

namespace detail {

template <typename Scalar>
Scalar ccw_angle(const Vec2<Scalar>& ref, const Vec2<Scalar>& v) {
  Scalar a = std::atan2(cross2(ref, v), ref.dot(v));
  if (a < Scalar(0)) a += Scalar(2) * kPi<Scalar>;
  return a;
}

// Unit directions leaving a contact point backwards and forwards along the
// polyline; absent at the polyline's ends.
template <typename Scalar>
struct Rays {
  std::optional<Vec2<Scalar>> in;
  std::optional<Vec2<Scalar>> out;
};

template <typename Scalar>
Rays<Scalar> rays_at(const Polyline<Scalar>& poly, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& cum,
                     const Vec2<Scalar>& x, Scalar s, Scalar tol) {
  Rays<Scalar> r;
  const auto n = poly.rows();
  // Walk back to the first vertex meaningfully behind x, forward likewise.
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    if (cum[k] < s - tol) {
      const Vec2<Scalar> d = row_point(poly, k) - x;
      if (d.norm() > tol) {
        r.in = d.normalized();
        break;
      }
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (cum[k] > s + tol) {
      const Vec2<Scalar> d = row_point(poly, k) - x;
      if (d.norm() > tol) {
        r.out = d.normalized();
        break;
      }
    }
  }
  return r;
}

template <typename Scalar>
bool is_crossing(const Rays<Scalar>& a, const Rays<Scalar>& b) {
  if (!a.in || !a.out || !b.in || !b.out) return false;
  const Scalar eps = Scalar(64) * std::numeric_limits<Scalar>::epsilon();
  const Scalar alpha = ccw_angle(*b.out, *b.in);
  const Scalar beta_in = ccw_angle(*b.out, *a.in);
  const Scalar beta_out = ccw_angle(*b.out, *a.out);
  auto on_b = [&](Scalar beta) {
    return beta < eps || std::abs(beta - alpha) < eps || beta > Scalar(2) * kPi<Scalar> - eps;
  };
  if (on_b(beta_in) || on_b(beta_out)) return false;
  const bool in_side = beta_in < alpha;
  const bool out_side = beta_out < alpha;
  return in_side != out_side;
}

template <typename Scalar>
struct RawOverlap {
  Scalar sa_lo, sa_hi, sb_lo, sb_hi;
  Eigen::Index seg_a_lo, seg_b_lo, seg_a_hi, seg_b_hi;
  Scalar ta_lo, tb_lo, ta_hi, tb_hi;
};

}  // namespace detail

/// Crossings and collinear-overlap boundaries between two polylines, ordered
/// by arc length along a. Tangential touches (the curves meet without
/// changing sides) are omitted; coincident contacts are reported once.
template <typename Scalar>
std::vector<Intersection<Scalar>> polyline_intersections(const Polyline<Scalar>& a,
                                                         const Polyline<Scalar>& b,
                                                         Scalar tol = Scalar(1e-9)) {
  std::vector<Intersection<Scalar>> points;
  std::vector<detail::RawOverlap<Scalar>> overlaps;
  if (a.rows() < 2 || b.rows() < 2) return {};
  const auto cum_a = cumulative_length(a);
  const auto cum_b = cumulative_length(b);

  for (Eigen::Index i = 0; i + 1 < a.rows(); ++i) {
    const Vec2<Scalar> p = row_point(a, i);
    const Vec2<Scalar> r = row_point(a, i + 1) - p;
    const Scalar lr = r.norm();
    if (lr <= tol) continue;
    for (Eigen::Index j = 0; j + 1 < b.rows(); ++j) {
      const Vec2<Scalar> q = row_point(b, j);
      const Vec2<Scalar> s = row_point(b, j + 1) - q;
      const Scalar ls = s.norm();
      if (ls <= tol) continue;
      // Cheap reject on bounding boxes.
      const Vec2<Scalar> a_lo = p.cwiseMin(p + r), a_hi = p.cwiseMax(p + r);
      const Vec2<Scalar> b_lo = q.cwiseMin(q + s), b_hi = q.cwiseMax(q + s);
      if ((a_lo.array() > b_hi.array() + tol).any() || (b_lo.array() > a_hi.array() + tol).any())
        continue;

      const Scalar denom = cross2(r, s);
      const Vec2<Scalar> qp = q - p;
      if (std::abs(denom) <= tol * lr * ls) {
        if (std::abs(cross2(qp, r)) / lr > tol) continue;  // parallel, apart
        const Scalar t0 = qp.dot(r) / (lr * lr);
        const Scalar t1 = (qp + s).dot(r) / (lr * lr);
        const Scalar lo = std::max(Scalar(0), std::min(t0, t1));
        const Scalar hi = std::min(Scalar(1), std::max(t0, t1));
        if (hi < lo - tol / lr) continue;
        auto u_of = [&](Scalar t) {
          return std::clamp((p + t * r - q).dot(s) / (ls * ls), Scalar(0), Scalar(1));
        };
        if ((hi - lo) * lr > tol) {
          const Scalar ulo = u_of(lo), uhi = u_of(hi);
          overlaps.push_back({cum_a[i] + lo * lr, cum_a[i] + hi * lr, cum_b[j] + ulo * ls,
                              cum_b[j] + uhi * ls, i, j, i, j, lo, ulo, hi, uhi});
        } else {
          const Scalar t = std::clamp(lo, Scalar(0), Scalar(1));
          const Scalar u = u_of(t);
          Intersection<Scalar> x;
          x.point = p + t * r;
          x.segment_a = i;
          x.t_a = t;
          x.segment_b = j;
          x.t_b = u;
          x.s_a = cum_a[i] + t * lr;
          x.s_b = cum_b[j] + u * ls;
          points.push_back(x);
        }
        continue;
      }
      Scalar t = cross2(qp, s) / denom;
      Scalar u = cross2(qp, r) / denom;
      if (t < -tol / lr || t > Scalar(1) + tol / lr || u < -tol / ls || u > Scalar(1) + tol / ls)
        continue;
      t = std::clamp(t, Scalar(0), Scalar(1));
      u = std::clamp(u, Scalar(0), Scalar(1));
      Intersection<Scalar> x;
      x.point = p + t * r;
      x.segment_a = i;
      x.t_a = t;
      x.segment_b = j;
      x.t_b = u;
      x.s_a = cum_a[i] + t * lr;
      x.s_b = cum_b[j] + u * ls;
      points.push_back(x);
    }
  }

  // Merge overlap pieces that continue each other along a.
  std::sort(overlaps.begin(), overlaps.end(),
            [](const auto& l, const auto& r) { return l.sa_lo < r.sa_lo; });
  std::vector<detail::RawOverlap<Scalar>> merged;
  for (const auto& o : overlaps) {
    if (!merged.empty() && o.sa_lo <= merged.back().sa_hi + tol) {
      auto& m = merged.back();
      if (o.sa_hi > m.sa_hi) {
        m.sa_hi = o.sa_hi;
        m.sb_hi = o.sb_hi;
        m.seg_a_hi = o.seg_a_hi;
        m.seg_b_hi = o.seg_b_hi;
        m.ta_hi = o.ta_hi;
        m.tb_hi = o.tb_hi;
      }
    } else {
      merged.push_back(o);
    }
  }

  std::sort(points.begin(), points.end(), [](const auto& l, const auto& r) { return l.s_a < r.s_a; });
  std::vector<Intersection<Scalar>> out;
  for (const auto& x : points) {
    const bool inside_overlap = std::any_of(merged.begin(), merged.end(), [&](const auto& m) {
      return x.s_a >= m.sa_lo - tol && x.s_a <= m.sa_hi + tol;
    });
    if (inside_overlap) continue;
    const bool duplicate = std::any_of(out.begin(), out.end(), [&](const auto& y) {
      return std::abs(y.s_a - x.s_a) <= tol && std::abs(y.s_b - x.s_b) <= tol;
    });
    if (duplicate) continue;
    out.push_back(x);
  }
  // Classify after deduplication so each contact is examined once.
  std::vector<Intersection<Scalar>> result;
  for (const auto& x : out) {
    const auto ra = detail::rays_at(a, cum_a, x.point, x.s_a, tol);
    const auto rb = detail::rays_at(b, cum_b, x.point, x.s_b, tol);
    if (detail::is_crossing(ra, rb)) result.push_back(x);
  }
  for (const auto& m : merged) {
    Intersection<Scalar> lo, hi;
    lo.kind = IntersectionKind::OverlapStart;
    lo.s_a = m.sa_lo;
    lo.s_b = m.sb_lo;
    lo.segment_a = m.seg_a_lo;
    lo.segment_b = m.seg_b_lo;
    lo.t_a = m.ta_lo;
    lo.t_b = m.tb_lo;
    lo.point = point_at_length(a, cum_a, m.sa_lo);
    hi.kind = IntersectionKind::OverlapEnd;
    hi.s_a = m.sa_hi;
    hi.s_b = m.sb_hi;
    hi.segment_a = m.seg_a_hi;
    hi.segment_b = m.seg_b_hi;
    hi.t_a = m.ta_hi;
    hi.t_b = m.tb_hi;
    hi.point = point_at_length(a, cum_a, m.sa_hi);
    result.push_back(lo);
    result.push_back(hi);
  }
  std::stable_sort(result.begin(), result.end(),
                   [](const auto& l, const auto& r) { return l.s_a < r.s_a; });
  return result;
}

/// True when any two non-adjacent segments touch, or adjacent ones fold back
/// onto each other.
template <typename Scalar>
bool self_intersects(const Polyline<Scalar>& poly, Scalar tol = Scalar(1e-9)) {
  const Polyline<Scalar> p = dedupe_vertices(poly, tol);
  const Eigen::Index m = p.rows() - 1;  // segment count
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    const Vec2<Scalar> d0 = row_point(p, i + 1) - row_point(p, i);
    const Vec2<Scalar> d1 = row_point(p, i + 2) - row_point(p, i + 1);
    if (std::abs(cross2(d0, d1)) <= tol * d0.norm() * d1.norm() && d0.dot(d1) < Scalar(0)) return true;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 2; j < m; ++j) {
      Polyline<Scalar> si(2, 2), sj(2, 2);
      si << p.row(i), p.row(i + 1);
      sj << p.row(j), p.row(j + 1);
      const Vec2<Scalar> a = row_point(si, 0), b = row_point(si, 1);
      const Vec2<Scalar> c = row_point(sj, 0), d = row_point(sj, 1);
      // Closed ring: first and last segment may share the end vertex.
      const bool ring_join = (i == 0 && j == m - 1 && (a - d).norm() <= tol);
      const Scalar dist = std::min({point_segment_distance(a, c, d), point_segment_distance(b, c, d),
                                    point_segment_distance(c, a, b), point_segment_distance(d, a, b)});
      const Scalar o1 = cross2(Vec2<Scalar>(b - a), Vec2<Scalar>(c - a));
      const Scalar o2 = cross2(Vec2<Scalar>(b - a), Vec2<Scalar>(d - a));
      const Scalar o3 = cross2(Vec2<Scalar>(d - c), Vec2<Scalar>(a - c));
      const Scalar o4 = cross2(Vec2<Scalar>(d - c), Vec2<Scalar>(b - c));
      const bool proper = (o1 > 0) != (o2 > 0) && (o3 > 0) != (o4 > 0) && o1 != 0 && o2 != 0 &&
                          o3 != 0 && o4 != 0;
      if (ring_join) continue;
      if (proper || dist <= tol) return true;
    }
  }
  return false;
}

/// Dist and E_diff for a driven trajectory against the prescribed path.
/// Throws UnsupportedInputError for a self-intersecting prescribed path and
/// ValidationError for polylines with fewer than two points.
template <typename Scalar>
BasicMetricReport<Scalar> area_error(const Polyline<Scalar>& prescribed_in, const Polyline<Scalar>& actual_in,
                                     Scalar tol = Scalar(1e-9)) {
  if (prescribed_in.rows() < 2 || actual_in.rows() < 2)
    throw ValidationError("area_error needs polylines with at least two points");
  BasicMetricReport<Scalar> report;
  report.dist = path_length(actual_in);

  const Polyline<Scalar> prescribed = dedupe_vertices(prescribed_in, tol);
  const Polyline<Scalar> actual = dedupe_vertices(actual_in, tol);
  if (prescribed.rows() < 2 || path_length(prescribed) <= tol)
    throw ValidationError("prescribed path has zero length");
  if (self_intersects(prescribed, tol))
    throw UnsupportedInputError("prescribed path is self-intersecting");
  if (actual.rows() < 2 || report.dist <= tol) return report;

  const auto cum_p = cumulative_length(prescribed);
  const auto cum_a = cumulative_length(actual);
  const Scalar len_a = cum_a[actual.rows() - 1];

  struct Boundary {
    Scalar s_act, s_pre;
    Vec2<Scalar> point;
    std::optional<IntersectionKind> kind;  // empty for projected endpoints
  };
  std::vector<Boundary> bounds;
  const Vec2<Scalar> a0 = row_point(actual, 0);
  const Vec2<Scalar> a1 = row_point(actual, actual.rows() - 1);
  bounds.push_back({Scalar(0), project_onto_polyline(a0, prescribed), a0, std::nullopt});
  for (const auto& x : polyline_intersections(actual, prescribed, tol)) {
    bounds.push_back({x.s_a, x.s_b, x.point, x.kind});
    report.intersection_points.push_back(x.point);
  }
  bounds.push_back({len_a, project_onto_polyline(a1, prescribed), a1, std::nullopt});

  // Fold the projected endpoints into coincident intersections.
  std::vector<Boundary> merged;
  for (const auto& b : bounds) {
    if (!merged.empty() && std::abs(b.s_act - merged.back().s_act) <= tol) {
      if (!merged.back().kind) merged.back() = b;
      else if (b.kind) merged.push_back(b);
      continue;
    }
    merged.push_back(b);
  }

  for (std::size_t k = 0; k + 1 < merged.size(); ++k) {
    const auto& b0 = merged[k];
    const auto& b1 = merged[k + 1];
    if (b0.kind == IntersectionKind::OverlapStart && b1.kind == IntersectionKind::OverlapEnd) continue;
    const Polyline<Scalar> pre = sub_polyline(prescribed, cum_p, b0.s_pre, b1.s_pre);
    const Polyline<Scalar> act = sub_polyline(actual, cum_a, b1.s_act, b0.s_act);
    Polyline<Scalar> loop(pre.rows() + act.rows(), 2);
    loop << pre, act;
    AreaSegment<Scalar> seg;
    seg.from = b0.point;
    seg.to = b1.point;
    seg.area = std::abs(signed_area(loop));
    seg.polygon = std::move(loop);
    report.e_diff += seg.area;
    report.segments.push_back(std::move(seg));
  }
  return report;
}

}  // namespace bmi
