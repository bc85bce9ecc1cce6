#pragma once

#include <Eigen/Dense>

namespace posefuse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Rotation vector: direction = axis, norm = angle in radians.
/// The canonical logarithm keeps the norm in [0, pi].
using AxisAngleVec = Eigen::Vector3d;

/// Element of SO(3). Construction through from_matrix() enforces
/// orthonormality and det = +1 to 1e-9; matrices outside tolerance are
/// re-projected onto the group (via the proper SVD) rather than rejected,
/// since long pipelines accumulate harmless drift.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }
  static Rotation from_matrix(const Mat3& m);
  /// Trusted constructor for matrices already on the group (compositions,
  /// exponentials). Skips the validity check.
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }

  const Mat3& matrix() const { return m_; }
  Rotation inverse() const { return Rotation(m_.transpose()); }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }
  Vec3 operator*(const Vec3& p) const { return m_ * p; }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// Proper SVD m = u diag(d) v^T with u, v in SO(3) and
/// d1 >= d2 >= |d3| (d3 may be negative).
struct ProperSvd {
  Rotation u;
  Vec3 d;
  Rotation v;
};

/// Skew map: hat(v) w = v x w.
Mat3 hat(const Vec3& v);
/// Inverse of hat on skew-symmetric matrices.
Vec3 vee(const Mat3& m);

/// Exponential map (Rodrigues), Taylor branch below 1e-8.
Rotation exp_so3(const AxisAngleVec& v);
/// Canonical logarithm; returns the rotation vector with norm in [0, pi].
/// At the cut locus (angle pi) the axis comes from the dominant
/// eigenvector of the symmetric part, sign fixed so the
/// largest-magnitude component is positive.
AxisAngleVec log_so3(const Rotation& r);

ProperSvd proper_svd(const Mat3& m);

/// Geodesic distance ||log(a^T b)|| in [0, pi].
double geodesic_angle(const Rotation& a, const Rotation& b);

/// Frobenius deviation of m^T m from I combined with |det(m) - 1|;
/// zero exactly on SO(3).
double rotation_defect(const Mat3& m);

}  // namespace posefuse
