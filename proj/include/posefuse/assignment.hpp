#pragma once

#include <array>

#include "posefuse/detector.hpp"
#include "posefuse/scene.hpp"

namespace posefuse {

/// Ground truth for one frame: presence labels and, for present classes,
/// the exact projected keypoints (same missing-pixel convention as the
/// detector, so absent points compare equal).
struct GroundTruthFrame {
  ClassLabels c_g{};  // c_g[kNoObjectIndex] is always 0
  std::array<Keypoints2, kNumClasses> keypoints{};
};

/// Assignment of detector query rows to classes.
struct MatchResult {
  std::array<int, kNumClasses> sigma{};  // sigma[c] = query row for class c
  double cost = 0.0;
};

/// sum_i -c_g[i] * probs(sigma[i], i), accumulated in ascending class
/// order so the value is bit-reproducible.
double matching_cost(const std::array<int, kNumClasses>& sigma,
                     const ProbMatrix& probs, const ClassLabels& c_g);

/// Minimum-cost assignment (Kuhn-Munkres, shortest augmenting paths over
/// row/column potentials). Absent classes contribute zero cost whatever
/// row they get, so ties are structural; the result is made deterministic
/// by returning the lexicographically smallest sigma among minimizers,
/// found by fixing sigma[0], sigma[1], ... to the smallest row that still
/// admits a minimum-cost completion.
MatchResult hungarian_match(const ProbMatrix& probs, const ClassLabels& c_g);

/// Set-prediction loss. Per class i: negative log probability of the
/// matched row at class i (present) or at no-object (absent), plus
/// gamma * L1 distance over all 64 keypoint coordinates for present
/// classes. Probabilities are clamped at 1e-12 before the log.
double keypoint_loss(const MatchResult& match, const ProbMatrix& probs,
                     const std::array<Keypoints2, kNumClasses>& pred_kp,
                     const GroundTruthFrame& gt, double gamma = 10.0);

}  // namespace posefuse
