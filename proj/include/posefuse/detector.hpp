#pragma once

#include <array>

#include "posefuse/camera.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/scene.hpp"

namespace posefuse {

/// Pixel value emitted for keypoints the simulated detector does not
/// produce (behind the camera, dropped parts, the spare query slot).
/// Far outside any image, so an in-bounds validity test filters it.
constexpr double kMissingPixel = -1e4;

/// What the detection network emits for one image: a row-stochastic
/// class-probability matrix (row = query) and 32 keypoints per query.
struct DetectionSet {
  ProbMatrix probs = ProbMatrix::Zero();
  std::array<Keypoints2, kNumClasses> keypoints{};
};

/// Detector error model. Confidence of a detected part is
/// floor + (1 - floor) * Beta(alpha, beta); the no-object confidence of
/// undetected queries is mapped into (0.9, 1) the same way so the fusion
/// gate always rejects them.
///
/// Keypoint noise scales with apparent size: a part whose projected
/// bounding-box diagonal is diag_px gets iid Gaussian noise of
///   pixel_sigma * clamp(diag_px / sigma_ref_diag_px, sigma_min_frac, 1)
/// per coordinate, mirroring how keypoint-regression error tracks the
/// structure's extent in the image down to a sub-pixel floor.
/// sigma_ref_diag_px = 0 turns the scaling off (flat pixel_sigma).
struct NoiseConfig {
  double pixel_sigma = 2.0;           // pixels, at full apparent size
  double sigma_ref_diag_px = 400.0;   // diagonal at which the full sigma applies
  double sigma_min_frac = 0.25;       // noise floor as a fraction of pixel_sigma
  double confidence_alpha = 8.0;
  double confidence_beta = 1.0;
  double confidence_floor = 0.85;
  double dropout_prob = 0.0;          // chance a visible part goes undetected
  double min_diag_px = 0.0;           // drop parts projecting smaller than this
  double visibility_min_fraction = 0.5;
};

/// Per-part visibility under the projection rule (fraction of keypoints
/// in front and in image >= min_fraction).
std::array<bool, kNumParts> visible_parts(const Scene& scene,
                                          const CameraIntrinsics& intr,
                                          const CameraPose& pose,
                                          double min_fraction);

/// Simulated network output for one frame. Query j covers part j: if the
/// part is visible, survives dropout, and its projected extent is at
/// least min_diag_px, the row peaks at class j and the keypoints are the
/// true projections plus noise (kMissingPixel where the true point is
/// behind the camera); otherwise the row peaks at no-object. The spare
/// query peaks at no-object. Rows are renormalized to sum to 1.
/// Draw order per part: dropout (only if dropout_prob > 0), confidence,
/// then two noise values per in-front keypoint (only if the effective
/// sigma is positive).
DetectionSet simulate(const Scene& scene, const CameraIntrinsics& intr,
                      const CameraPose& pose, const NoiseConfig& cfg,
                      Rng& rng);

/// Reorder query slots: row j of ds becomes row perm[j] of the result
/// (probs and keypoints move together). Exercises the matcher with
/// query != class.
DetectionSet misassign(const DetectionSet& ds,
                       const std::array<int, kNumClasses>& perm);

std::array<int, kNumClasses> random_permutation(Rng& rng);

}  // namespace posefuse
