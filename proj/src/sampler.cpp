#include "posefuse/sampler.hpp"

#include <stdexcept>

namespace posefuse {

Vec3 spherical_to_cartesian(double r, double theta, double phi) {
  const double cp = std::cos(phi);
  return r * Vec3(cp * std::cos(theta), cp * std::sin(theta), std::sin(phi));
}

Vec3 sample_camera_position(const SamplerConfig& cfg, Rng& rng) {
  const double theta = rng.uniform(-M_PI, 0.0);
  const double phi = rng.uniform(0.0, cfg.camera_phi_max);
  const double r = sample_truncated_normal(cfg.camera_r_mean, cfg.camera_r_std,
                                           0.0, cfg.camera_r_max, rng);
  return spherical_to_cartesian(r, theta, phi);
}

Vec3 sample_focus_point(const SamplerConfig& cfg, Rng& rng) {
  const double theta = rng.uniform(0.0, 2.0 * M_PI);
  const double phi = rng.uniform(-M_PI / 2.0, M_PI / 2.0);
  const double r = sample_truncated_normal(cfg.focus_r_mean, cfg.focus_r_std,
                                           0.0, cfg.focus_r_max, rng);
  return spherical_to_cartesian(r, theta, phi);
}

std::optional<Rotation> lookat_attitude(const Vec3& c, const Vec3& f,
                                        double psi) {
  const Vec3 look = f - c;
  const double len = look.norm();
  if (len < 1e-12) return std::nullopt;
  const Vec3 r3 = -look / len;
  Vec3 r1 = Vec3::UnitZ().cross(r3);
  const double s = r1.norm();
  if (s < 1e-9) return std::nullopt;  // looking straight up/down
  r1 /= s;
  const Vec3 r2 = r3.cross(r1);
  Mat3 m;
  m.col(0) = r1;
  m.col(1) = r2;
  m.col(2) = r3;
  return Rotation::from_matrix_unchecked(m) * exp_so3(psi * Vec3::UnitZ());
}

CameraPose sample_pose(const SamplerConfig& cfg, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Vec3 c = sample_camera_position(cfg, rng);
    const Vec3 f = sample_focus_point(cfg, rng);
    const double psi = rng.uniform(-cfg.psi_max, cfg.psi_max);
    if (auto r = lookat_attitude(c, f, psi)) return {c, *r};
  }
  throw std::runtime_error(
      "sample_pose: 100 consecutive degenerate look-at draws; "
      "the sampler configuration is degenerate");
}

}  // namespace posefuse
