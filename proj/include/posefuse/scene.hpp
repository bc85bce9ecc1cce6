#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "posefuse/so3.hpp"

namespace posefuse {

constexpr int kNumKeypoints = 32;  // 8 cuboid corners + 24 edge-third points
constexpr int kNumParts = 6;
constexpr int kNumClasses = 7;  // six parts + the no-object class
constexpr int kNoObjectIndex = kNumClasses - 1;

using Keypoints3 = Eigen::Matrix<double, kNumKeypoints, 3>;
using Keypoints2 = Eigen::Matrix<double, kNumKeypoints, 2>;
using ClassLabels = std::array<std::uint8_t, kNumClasses>;
/// Row-stochastic class probabilities, row = detector query slot.
using ProbMatrix = Eigen::Matrix<double, kNumClasses, kNumClasses>;

/// One rigid part of the ship: a class index and the 32 canonical 3D
/// keypoints of its bounding box in the ship-fixed base frame (meters;
/// x starboard, y bow, z up).
struct PartModel {
  int class_index = 0;
  std::string name;
  Keypoints3 keypoints3d = Keypoints3::Zero();
};

struct Scene {
  std::vector<PartModel> parts;  // exactly kNumParts, class_index 0..5
};

/// Expand an axis-aligned box into the canonical 32 keypoints.
/// Corners are indexed by bits (bx, by, bz), index = 4bx + 2by + bz, bit 0
/// selecting the min and bit 1 the max along that axis. The 12 edges are
/// the lexicographically sorted corner-index pairs differing in one bit;
/// each contributes its t = 1/3 point then its t = 2/3 point (indices
/// 8..31). Throws on a degenerate box (any extent <= 0).
Keypoints3 keypoints_from_box(const Vec3& min_corner, const Vec3& max_corner);

/// Same expansion for a part given by 8 explicit corners in canonical
/// corner order (supports non-axis-aligned boxes).
Keypoints3 keypoints_from_corners(const std::array<Vec3, 8>& corners);

/// Binary presence labels c_g: c_g[j] = 1 iff part j is visible;
/// the no-object slot is always 0.
ClassLabels ground_truth_labels(const Scene& scene,
                                const std::array<bool, kNumParts>& visible);

/// Bundled default scene: the six parts as axis-aligned boxes with
/// plausible extents for a ~33 m research vessel. Matches
/// data/default_scene.json.
Scene default_scene();

Scene parse_scene(const std::string& json_text);
Scene load_scene(const std::string& path);
std::string scene_to_json(const Scene& scene);

}  // namespace posefuse
