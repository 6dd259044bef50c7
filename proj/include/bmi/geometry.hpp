#pragma once

// Planar geometry primitives on Eigen fixed-size vectors. Polylines are N x 2
// matrices, one point per row.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace bmi {

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;

template <typename Scalar>
using Polyline = Eigen::Matrix<Scalar, Eigen::Dynamic, 2>;

using Vec2d = Vec2<double>;
using Polylined = Polyline<double>;

template <typename Scalar>
constexpr Scalar kPi = Scalar(3.141592653589793238462643383279502884L);

/// z-component of the 2D cross product.
template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return a.x() * b.y() - a.y() * b.x();
}

template <typename Scalar>
Vec2<Scalar> row_point(const Polyline<Scalar>& poly, Eigen::Index i) {
  return poly.row(i).transpose();
}

/// Parameter in [0, 1] of the point on segment [a, b] closest to p.
template <typename Scalar>
Scalar closest_parameter(const Vec2<Scalar>& p, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  const Vec2<Scalar> ab = b - a;
  const Scalar len2 = ab.squaredNorm();
  if (len2 == Scalar(0)) return Scalar(0);
  return std::clamp((p - a).dot(ab) / len2, Scalar(0), Scalar(1));
}

template <typename Scalar>
Vec2<Scalar> closest_point_on_segment(const Vec2<Scalar>& p, const Vec2<Scalar>& a,
                                      const Vec2<Scalar>& b) {
  return a + closest_parameter(p, a, b) * (b - a);
}

template <typename Scalar>
Scalar point_segment_distance(const Vec2<Scalar>& p, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return (p - closest_point_on_segment(p, a, b)).norm();
}

/// Sum of Euclidean segment lengths of an N x 2 point matrix.
template <typename Derived>
typename Derived::Scalar path_length(const Eigen::MatrixBase<Derived>& poly) {
  using Scalar = typename Derived::Scalar;
  if (poly.rows() < 2) return Scalar(0);
  const auto n = poly.rows();
  return (poly.bottomRows(n - 1) - poly.topRows(n - 1)).rowwise().norm().sum();
}

/// Cumulative arc length at each vertex; first entry is 0.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cumulative_length(const Polyline<Scalar>& poly) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> s(poly.rows());
  if (poly.rows() == 0) return s;
  s[0] = Scalar(0);
  for (Eigen::Index i = 1; i < poly.rows(); ++i)
    s[i] = s[i - 1] + (poly.row(i) - poly.row(i - 1)).norm();
  return s;
}

/// Signed shoelace area of the closed polygon through the rows of pts.
template <typename Derived>
typename Derived::Scalar signed_area(const Eigen::MatrixBase<Derived>& pts) {
  using Scalar = typename Derived::Scalar;
  const auto n = pts.rows();
  if (n < 3) return Scalar(0);
  Scalar acc(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index j = (i + 1) % n;
    acc += pts(i, 0) * pts(j, 1) - pts(j, 0) * pts(i, 1);
  }
  return acc / Scalar(2);
}

/// Drop consecutive vertices closer than tol to their predecessor.
template <typename Scalar>
Polyline<Scalar> dedupe_vertices(const Polyline<Scalar>& poly, Scalar tol) {
  if (poly.rows() == 0) return poly;
  Polyline<Scalar> out(poly.rows(), 2);
  Eigen::Index n = 0;
  out.row(n++) = poly.row(0);
  for (Eigen::Index i = 1; i < poly.rows(); ++i)
    if ((poly.row(i) - out.row(n - 1)).norm() > tol) out.row(n++) = poly.row(i);
  if (n == 1 && poly.rows() > 1) out.row(n++) = poly.row(poly.rows() - 1);
  return out.topRows(n);
}

/// Closest point on a polyline: returns arc length of the foot point.
template <typename Scalar>
Scalar project_onto_polyline(const Vec2<Scalar>& p, const Polyline<Scalar>& poly) {
  const auto cum = cumulative_length(poly);
  Scalar best_d = std::numeric_limits<Scalar>::infinity();
  Scalar best_s(0);
  for (Eigen::Index i = 0; i + 1 < poly.rows(); ++i) {
    const Vec2<Scalar> a = row_point(poly, i), b = row_point(poly, i + 1);
    const Scalar u = closest_parameter(p, a, b);
    const Scalar d = (p - (a + u * (b - a))).norm();
    if (d < best_d) {
      best_d = d;
      best_s = cum[i] + u * (cum[i + 1] - cum[i]);
    }
  }
  if (poly.rows() == 1) best_s = Scalar(0);
  return best_s;
}

/// Point at arc length s (clamped to the polyline's extent).
template <typename Scalar>
Vec2<Scalar> point_at_length(const Polyline<Scalar>& poly, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& cum,
                             Scalar s) {
  const auto n = poly.rows();
  if (n == 1 || s <= Scalar(0)) return row_point(poly, 0);
  if (s >= cum[n - 1]) return row_point(poly, n - 1);
  const auto* it = std::upper_bound(cum.data(), cum.data() + n, s);
  const Eigen::Index i = std::max<Eigen::Index>(0, (it - cum.data()) - 1);
  const Scalar span = cum[i + 1] - cum[i];
  const Scalar u = span > Scalar(0) ? (s - cum[i]) / span : Scalar(0);
  return row_point(poly, i) + u * (row_point(poly, i + 1) - row_point(poly, i));
}

/// Sub-polyline between arc lengths s_from and s_to, in travel order
/// (reversed when s_from > s_to). Endpoints are interpolated.
template <typename Scalar>
Polyline<Scalar> sub_polyline(const Polyline<Scalar>& poly, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& cum,
                              Scalar s_from, Scalar s_to) {
  const bool reversed = s_from > s_to;
  const Scalar lo = std::min(s_from, s_to), hi = std::max(s_from, s_to);
  std::vector<Vec2<Scalar>> pts;
  pts.push_back(point_at_length(poly, cum, lo));
  for (Eigen::Index i = 0; i < poly.rows(); ++i)
    if (cum[i] > lo && cum[i] < hi) pts.push_back(row_point(poly, i));
  pts.push_back(point_at_length(poly, cum, hi));
  if (reversed) std::reverse(pts.begin(), pts.end());
  Polyline<Scalar> out(static_cast<Eigen::Index>(pts.size()), 2);
  for (std::size_t k = 0; k < pts.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = pts[k].transpose();
  return out;
}

}  // namespace bmi
