#include <doctest.h>

#include <cmath>

#include "posefuse/rng.hpp"
#include "posefuse/so3.hpp"
#include "support.hpp"

using namespace posefuse;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Independent matrix exponential: plain truncated power series. Converges to
// machine precision for ||v|| <= pi well before 40 terms.
Mat3 exp_series(const Vec3& v) {
  const Mat3 a = hat(v);
  Mat3 term = Mat3::Identity();
  Mat3 sum = Mat3::Identity();
  for (int k = 1; k <= 40; ++k) {
    term = (term * a).eval() / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("hat and vee") {
  Rng rng(101);
  for (int i = 0; i < 50; ++i) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    Vec3 w(rng.normal(), rng.normal(), rng.normal());
    // hat(v) acts as the cross product operator.
    CHECK((hat(v) * w - v.cross(w)).norm() < 1e-14 * (1.0 + v.norm() * w.norm()));
    CHECK((hat(v).transpose() + hat(v)).norm() == 0.0);  // exactly antisymmetric
    CHECK(vee(hat(v)) == v);                             // pure element shuffles
  }
}

TEST_CASE("exp matches power series") {
  Rng rng(102);
  for (int i = 0; i < 100; ++i) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(0.0, kPi);
    const Vec3 v = angle * axis;
    CHECK((exp_so3(v).matrix() - exp_series(v)).norm() < 1e-13);
  }
  CHECK(exp_so3(Vec3::Zero()).matrix() == Mat3::Identity());
  // Tiny-angle branch agrees with I + hat(v) up to second order.
  const Vec3 tiny(1e-10, -2e-10, 0.5e-10);
  CHECK((exp_so3(tiny).matrix() - (Mat3::Identity() + hat(tiny))).norm() < 1e-15);
}

TEST_CASE("exp produces rotations") {
  Rng rng(103);
  for (int i = 0; i < 50; ++i) {
    Vec3 v(rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(-4, 4));
    CHECK(rotation_defect(exp_so3(v).matrix()) < 1e-14);
  }
}

TEST_CASE("log inverts exp on the injectivity domain") {
  Rng rng(104);
  for (int i = 0; i < 200; ++i) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const double angle = rng.uniform(1e-8, kPi - 0.05);
    const Vec3 v = angle * axis;
    CHECK((log_so3(exp_so3(v)) - v).norm() < 1e-11);
  }
}

TEST_CASE("log near and at pi") {
  Rng rng(105);
  for (int i = 0; i < 50; ++i) {
    Vec3 axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    const Rotation r = exp_so3(kPi * axis);
    const Vec3 v = log_so3(r);
    CHECK(v.norm() <= kPi + 1e-9);
    CHECK(std::abs(v.norm() - kPi) < 1e-6);
    // At the cut locus only exp(log(R)) == R is well defined, not log itself.
    CHECK((exp_so3(v).matrix() - r.matrix()).norm() < 1e-7);
  }
  // Angles beyond pi wrap back into [0, pi].
  Vec3 axis(0.48, -0.6, 0.64);
  axis.normalize();
  const Vec3 v = log_so3(exp_so3(1.5 * kPi * axis));
  CHECK(v.norm() == doctest::Approx(0.5 * kPi).epsilon(1e-10));
  CHECK((v.normalized() + axis).norm() < 1e-9);  // opposite axis after wrap
}

TEST_CASE("proper SVD reconstructs and orients") {
  Rng rng(106);
  for (int i = 0; i < 100; ++i) {
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = rng.uniform(-2, 2);
    const ProperSvd f = proper_svd(m);
    CHECK(rotation_defect(f.u.matrix()) < 1e-13);
    CHECK(rotation_defect(f.v.matrix()) < 1e-13);
    CHECK((f.u.matrix() * f.d.asDiagonal() * f.v.matrix().transpose() - m).norm() < 1e-12);
    CHECK(f.d(0) >= f.d(1));
    CHECK(f.d(1) >= std::abs(f.d(2)));
    // The sign of the smallest proper singular value carries det(m).
    const double det = m.determinant();
    if (std::abs(det) > 1e-9) CHECK(f.d(2) * det > 0.0);
  }
}

TEST_CASE("proper SVD of a rotation is trivial") {
  Rng rng(107);
  for (int i = 0; i < 20; ++i) {
    const Rotation r = test::random_rotation(rng);
    const ProperSvd f = proper_svd(r.matrix());
    CHECK((f.d - Vec3::Ones()).norm() < 1e-12);
    CHECK((f.u.matrix() * f.v.matrix().transpose() - r.matrix()).norm() < 1e-12);
  }
}

TEST_CASE("geodesic angle") {
  Rng rng(108);
  const Rotation a = test::random_rotation(rng);
  CHECK(geodesic_angle(a, a) == doctest::Approx(0.0).epsilon(1e-12));
  for (int i = 0; i < 50; ++i) {
    const Rotation b = test::random_rotation(rng);
    const Rotation c = test::random_rotation(rng);
    const double g = geodesic_angle(a, b);
    CHECK(g == doctest::Approx(geodesic_angle(b, a)).epsilon(1e-10));
    CHECK(g >= 0.0);
    CHECK(g <= kPi + 1e-12);
    // Left invariance.
    const Rotation ca = Rotation::from_matrix(c.matrix() * a.matrix());
    const Rotation cb = Rotation::from_matrix(c.matrix() * b.matrix());
    CHECK(geodesic_angle(ca, cb) == doctest::Approx(g).epsilon(1e-8));
    // Agrees with the norm of the relative log.
    CHECK(log_so3(Rotation::from_matrix(a.matrix().transpose() * b.matrix())).norm() ==
          doctest::Approx(g).epsilon(1e-8));
  }
  // Known value: rotation about z by 0.7 rad from identity.
  const Rotation rz = exp_so3(Vec3(0, 0, 0.7));
  CHECK(geodesic_angle(Rotation(), rz) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("rotation defect and from_matrix projection") {
  Rng rng(109);
  const Rotation r = test::random_rotation(rng);
  CHECK(rotation_defect(r.matrix()) < 1e-14);
  CHECK(rotation_defect(2.0 * r.matrix()) > 1.0);

  // A slightly corrupted rotation re-projects to a nearby exact rotation.
  Mat3 noisy = r.matrix();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) noisy(i, j) += 1e-7 * rng.normal();
  const Rotation fixed = Rotation::from_matrix(noisy);
  CHECK(rotation_defect(fixed.matrix()) < 1e-13);
  CHECK((fixed.matrix() - r.matrix()).norm() < 1e-5);
}
