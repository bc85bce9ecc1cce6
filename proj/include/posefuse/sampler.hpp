#pragma once

#include <cmath>
#include <optional>

#include "posefuse/camera.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/so3.hpp"

namespace posefuse {

/// Training-distribution pose sampling: camera position C on the upper
/// quarter-sphere aft of the flight deck, focus point F near the deck
/// origin, look-at attitude with a roll perturbation about the line of
/// sight.
struct SamplerConfig {
  // Camera position: theta_B ~ U[-pi, 0] (aft half), phi_B ~ U[0, phi_max],
  // r ~ TruncNormal(r_mean, r_std) on [0, r_max]; r_max is the maximum
  // range L.
  double camera_r_mean = 1.0;
  double camera_r_std = 40.0;
  double camera_r_max = 25.0;
  double camera_phi_max = M_PI / 3.0;
  // Focus point: theta ~ U[0, 2pi], phi ~ U[-pi/2, pi/2],
  // r ~ TruncNormal(r_mean, r_std) on [0, r_max].
  double focus_r_mean = 0.0;
  double focus_r_std = 1.0;
  double focus_r_max = 15.0;
  // Roll about the line of sight: psi ~ U[-psi_max, psi_max].
  double psi_max = M_PI / 6.0;
};

/// r (cos phi cos theta, cos phi sin theta, sin phi): azimuth theta from
/// +x (starboard) toward +y (bow), elevation phi from the deck plane.
Vec3 spherical_to_cartesian(double r, double theta, double phi);

/// Draw order per sample: theta, phi, r.
Vec3 sample_camera_position(const SamplerConfig& cfg, Rng& rng);
Vec3 sample_focus_point(const SamplerConfig& cfg, Rng& rng);

/// Attitude whose -z axis looks from c toward f with the x-axis level,
/// rolled by psi about the line of sight: r3' = -(f-c)/||f-c||,
/// r1' = e3 x r3' normalized, r2' = r3' x r1', R = R' exp_so3(psi e3).
/// nullopt when f == c or the look direction is within ~1e-9 of vertical
/// (level x-axis undefined); the caller resamples.
std::optional<Rotation> lookat_attitude(const Vec3& c, const Vec3& f,
                                        double psi);

/// Draws (C, F, psi) until lookat_attitude accepts. Throws after 100
/// rejections -- statistically unreachable under any sane config, so a
/// hit means the configuration itself is degenerate.
CameraPose sample_pose(const SamplerConfig& cfg, Rng& rng);

}  // namespace posefuse
