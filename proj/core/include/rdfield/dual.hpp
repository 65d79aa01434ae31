// Copyright 2026 The rdfield Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <cmath>

namespace rdf {

/// Forward-mode scalar carrying a value and its gradient with respect to a
/// fixed 3-vector input (used for sensor-velocity and axis-angle Jacobians).
struct Dual3 {
  double v = 0.0;
  Eigen::Vector3d g = Eigen::Vector3d::Zero();

  Dual3() = default;
  Dual3(double value) : v(value) {}  // NOLINT: implicit constant lift
  Dual3(double value, const Eigen::Vector3d& grad) : v(value), g(grad) {}

  /// A dual seeded as the `axis`-th input coordinate.
  static Dual3 seed(double value, int axis) {
    Dual3 d(value);
    d.g[axis] = 1.0;
    return d;
  }

  Dual3 operator-() const { return {-v, -g}; }
};

inline Dual3 operator+(const Dual3& a, const Dual3& b) { return {a.v + b.v, a.g + b.g}; }
inline Dual3 operator-(const Dual3& a, const Dual3& b) { return {a.v - b.v, a.g - b.g}; }
inline Dual3 operator*(const Dual3& a, const Dual3& b) {
  return {a.v * b.v, a.v * b.g + b.v * a.g};
}
inline Dual3 operator/(const Dual3& a, const Dual3& b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.g - (a.v * inv) * b.g) * inv};
}
inline Dual3& operator+=(Dual3& a, const Dual3& b) { return a = a + b; }
inline Dual3& operator-=(Dual3& a, const Dual3& b) { return a = a - b; }
inline Dual3& operator*=(Dual3& a, const Dual3& b) { return a = a * b; }

inline Dual3 sqrt(const Dual3& a) {
  const double r = std::sqrt(a.v);
  return {r, a.g / (2.0 * r)};
}
inline Dual3 sin(const Dual3& a) { return {std::sin(a.v), std::cos(a.v) * a.g}; }
inline Dual3 cos(const Dual3& a) { return {std::cos(a.v), -std::sin(a.v) * a.g}; }

inline bool operator<(const Dual3& a, const Dual3& b) { return a.v < b.v; }
inline bool operator>(const Dual3& a, const Dual3& b) { return a.v > b.v; }

/// 3-vector of Dual3 scalars. Kept as a plain struct instead of an Eigen
/// matrix with a custom scalar so we do not need NumTraits plumbing for the
/// handful of operations the circle and rotation builders use.
struct DualVec3 {
  Dual3 x, y, z;

  DualVec3() = default;
  DualVec3(Dual3 xx, Dual3 yy, Dual3 zz) : x(xx), y(yy), z(zz) {}
  explicit DualVec3(const Eigen::Vector3d& c) : x(c.x()), y(c.y()), z(c.z()) {}

  /// Lifts `v` as the differentiation variable (the identity seeding).
  static DualVec3 variable(const Eigen::Vector3d& v) {
    return {Dual3::seed(v.x(), 0), Dual3::seed(v.y(), 1), Dual3::seed(v.z(), 2)};
  }

  Eigen::Vector3d value() const { return {x.v, y.v, z.v}; }
  /// Rows are d(component)/d(input vector).
  Eigen::Matrix3d jacobian() const {
    Eigen::Matrix3d j;
    j.row(0) = x.g.transpose();
    j.row(1) = y.g.transpose();
    j.row(2) = z.g.transpose();
    return j;
  }
};

inline DualVec3 operator+(const DualVec3& a, const DualVec3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline DualVec3 operator-(const DualVec3& a, const DualVec3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline DualVec3 operator*(const Dual3& s, const DualVec3& a) {
  return {s * a.x, s * a.y, s * a.z};
}
inline Dual3 dot(const DualVec3& a, const DualVec3& b) {
  return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline DualVec3 cross(const DualVec3& a, const DualVec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline Dual3 norm(const DualVec3& a) { return sqrt(dot(a, a)); }
inline DualVec3 normalized(const DualVec3& a) {
  const Dual3 inv = Dual3(1.0) / norm(a);
  return inv * a;
}

}  // namespace rdf
