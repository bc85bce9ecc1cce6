#pragma once

#include <array>
#include <optional>
#include <utility>

#include "posefuse/camera.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/scene.hpp"
#include "posefuse/so3.hpp"

namespace posefuse {

/// One part's recovered pose. (rotation, translation) maps base-frame
/// points into the camera frame: p_c = R p + t, with the camera frame of
/// camera.hpp (+y up, -z line of sight); the camera position in the base
/// frame is C = -R^T t.
struct PartPoseEstimate {
  int class_index = -1;
  Rotation rotation;
  Vec3 translation = Vec3::Zero();
  double confidence = 0.0;  // the matched class probability, set by caller
  std::array<bool, kNumKeypoints> inliers{};
  double reproj_error = 0.0;  // mean pixel error over inliers
};

struct RansacConfig {
  int max_iterations = 200;
  double inlier_threshold = 4.0;  // pixels, strict
  int min_inliers = 12;
  int sample_size = 6;
};

/// EPnP: express the n world points as barycentric combinations of 4
/// control points (centroid + principal axes; 3 control points when the
/// cloud is planar within 1e-6 m), recover the control points in the
/// camera frame from the null space of the 2n x 12 projection system
/// (candidate null-space dimensions 1-3, beta sign cases, Gauss-Newton on
/// the pairwise-distance constraints), then rigidly align. Returns the
/// candidate with the smallest reprojection error.
/// Throws std::invalid_argument for n < 4 or collinear points.
std::pair<Rotation, Vec3> epnp(const Eigen::MatrixX3d& pts3d,
                               const Eigen::MatrixX2d& pts2d,
                               const CameraIntrinsics& intr);

/// RANSAC around epnp on the valid correspondences: repeatedly fit on a
/// random minimal sample, count points reprojecting within
/// inlier_threshold, keep the largest consensus (early exit once enough
/// iterations passed for 99% confidence at the observed inlier ratio),
/// then refit on all inliers. nullopt when no model reaches min_inliers.
/// confidence and class_index are left for the caller.
std::optional<PartPoseEstimate> estimate_pose(
    const Keypoints3& pts3d, const Keypoints2& pts2d,
    const std::array<bool, kNumKeypoints>& valid, const CameraIntrinsics& intr,
    const RansacConfig& cfg, Rng& rng);

}  // namespace posefuse
