#include "posefuse/so3.hpp"

#include <cmath>
#include <stdexcept>

namespace posefuse {

namespace {
constexpr double kGroupTol = 1e-9;
}

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m) { return Vec3(m(2, 1), m(0, 2), m(1, 0)); }

double rotation_defect(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
  const double det = std::fabs(m.determinant() - 1.0);
  return std::max(ortho, det);
}

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!m.allFinite())
    throw std::invalid_argument("Rotation::from_matrix: non-finite matrix");
  if (rotation_defect(m) <= kGroupTol) return Rotation(m);
  const ProperSvd s = proper_svd(m);
  return s.u * s.v.inverse();
}

Rotation exp_so3(const AxisAngleVec& v) {
  const double theta2 = v.squaredNorm();
  const double theta = std::sqrt(theta2);
  double a, b;  // R = I + a hat(v) + b hat(v)^2
  if (theta < 1e-8) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  const Mat3 k = hat(v);
  return Rotation::from_matrix_unchecked(Mat3::Identity() + a * k + b * k * k);
}

AxisAngleVec log_so3(const Rotation& r) {
  const Mat3& m = r.matrix();
  const Vec3 w = vee(m - m.transpose()) * 0.5;  // sin(theta) * axis
  const double s = w.norm();
  const double c = (m.trace() - 1.0) * 0.5;
  const double theta = std::atan2(s, c);
  if (theta < 1e-8) return w;  // w = theta*axis + O(theta^3)
  if (theta < M_PI - 1e-6) return (theta / s) * w;
  // Near the cut locus sin(theta) is tiny; recover the axis from the
  // symmetric part instead, whose null direction is exact at pi.
  Eigen::SelfAdjointEigenSolver<Mat3> eig(0.5 * (m + m.transpose()) -
                                          Mat3::Identity());
  Vec3 axis = eig.eigenvectors().col(2);  // eigenvalue closest to 0
  axis.normalize();
  if (s > 1e-10) {
    // Not exactly at pi: keep continuity with the antisymmetric part.
    if (axis.dot(w) < 0.0) axis = -axis;
  } else {
    // At pi the sign is a free choice; pick a deterministic one.
    int k = 0;
    axis.cwiseAbs().maxCoeff(&k);
    if (axis[k] < 0.0) axis = -axis;
  }
  return theta * axis;
}

ProperSvd proper_svd(const Mat3& m) {
  if (!m.allFinite())
    throw std::invalid_argument("proper_svd: non-finite matrix");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  Vec3 d = svd.singularValues();  // descending, nonnegative
  const double du = u.determinant() < 0.0 ? -1.0 : 1.0;
  const double dv = v.determinant() < 0.0 ? -1.0 : 1.0;
  u.col(2) *= du;
  v.col(2) *= dv;
  d.z() *= du * dv;
  return ProperSvd{Rotation::from_matrix_unchecked(u), d,
                   Rotation::from_matrix_unchecked(v)};
}

double geodesic_angle(const Rotation& a, const Rotation& b) {
  return log_so3(a.inverse() * b).norm();
}

}  // namespace posefuse
