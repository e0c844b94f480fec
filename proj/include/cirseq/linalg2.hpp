#pragma once

#include <cmath>

namespace cirseq {

struct Vec2 {
  double a = 0.0;
  double b = 0.0;

  double norm_sq() const { return a * a + b * b; }
  friend Vec2 operator-(Vec2 u, Vec2 v) { return {u.a - v.a, u.b - v.b}; }
  friend Vec2 operator+(Vec2 u, Vec2 v) { return {u.a + v.a, u.b + v.b}; }
  friend Vec2 operator*(double s, Vec2 v) { return {s * v.a, s * v.b}; }
  friend bool operator==(Vec2, Vec2) = default;
};

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Matrix2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  double trace() const { return xx + yy; }
  double det() const { return xx * yy - xy * xy; }
  double frobenius() const { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }

  double min_eigenvalue() const {
    const double half_gap = std::hypot(0.5 * (xx - yy), xy);
    return 0.5 * (xx + yy) - half_gap;
  }
  double max_eigenvalue() const {
    const double half_gap = std::hypot(0.5 * (xx - yy), xy);
    return 0.5 * (xx + yy) + half_gap;
  }

  /// Caller guarantees det() != 0.
  Matrix2 inverse() const {
    const double d = det();
    return {yy / d, -xy / d, xx / d};
  }

  Vec2 operator*(Vec2 v) const { return {xx * v.a + xy * v.b, xy * v.a + yy * v.b}; }
  friend Matrix2 operator*(double s, const Matrix2& m) { return {s * m.xx, s * m.xy, s * m.yy}; }
  friend bool operator==(const Matrix2&, const Matrix2&) = default;
};

}  // namespace cirseq
