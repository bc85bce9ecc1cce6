#pragma once

#include <array>
#include <string>

#include <Eigen/Dense>

#include "posefuse/scene.hpp"
#include "posefuse/so3.hpp"

namespace posefuse {

/// Ideal pinhole, no distortion. Camera frame: +x right, +y up, +z
/// opposite the line of sight, so points in front have negative z.
/// The v axis flips inside the projection (pixel rows run downward).
struct CameraIntrinsics {
  double fx = 0, fy = 0;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels
  int width = 0, height = 0;
};

/// Camera pose in the ship base frame: position C and the camera-to-base
/// attitude R (columns = camera axes expressed in base coordinates).
struct CameraPose {
  Vec3 position = Vec3::Zero();
  Rotation attitude;
};

/// Projected keypoints with per-point validity. Pixel values of points
/// with in_front = false are undefined and must never be read.
struct Keypoints2D {
  Keypoints2 pts = Keypoints2::Zero();
  std::array<bool, kNumKeypoints> in_front{};
  std::array<bool, kNumKeypoints> in_image{};
};

/// 640x480, 60 deg horizontal FOV, square pixels: fx = fy = 320/tan(30deg).
/// Matches data/default_intrinsics.json.
CameraIntrinsics default_intrinsics();

/// p_c = R^T (p - C); u = fx (x / -z) + cx, v = cy - fy (y / -z).
/// in_front requires -z > 1e-6; in_image additionally requires
/// 0 <= u < width and 0 <= v < height.
Keypoints2D project(const CameraIntrinsics& intr, const CameraPose& pose,
                    const Keypoints3& pts3d);

/// Single point under extrinsics mapping base to camera, p_c = r_bc p + t
/// (r_bc = attitude^T, t = -r_bc C for a CameraPose). Returns false and
/// leaves uv untouched when the point is not in front.
bool project_extrinsic(const CameraIntrinsics& intr, const Mat3& r_bc,
                       const Vec3& t, const Vec3& p, Eigen::Vector2d* uv);

/// True iff the fraction of keypoints with in_front and in_image is
/// >= min_fraction (inclusive at the boundary).
bool part_visible(const Keypoints2D& kp, double min_fraction);

CameraIntrinsics parse_intrinsics(const std::string& json_text);
CameraIntrinsics load_intrinsics(const std::string& path);
std::string intrinsics_to_json(const CameraIntrinsics& intr);

}  // namespace posefuse
