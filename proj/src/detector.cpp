#include "posefuse/detector.hpp"

#include <algorithm>
#include <limits>

namespace posefuse {

namespace {

// Row with probability o at `peak`, the remainder spread evenly over the
// other classes, renormalized to kill rounding residue.
void set_row(ProbMatrix& probs, int row, int peak, double o) {
  for (int c = 0; c < kNumClasses; ++c)
    probs(row, c) = (c == peak) ? o : (1.0 - o) / (kNumClasses - 1);
  probs.row(row) /= probs.row(row).sum();
}

double detected_confidence(const NoiseConfig& cfg, Rng& rng) {
  return cfg.confidence_floor + (1.0 - cfg.confidence_floor) *
                                    rng.beta(cfg.confidence_alpha,
                                             cfg.confidence_beta);
}

// No-object confidence for undetected queries, always past the 0.9 gate.
double null_confidence(const NoiseConfig& cfg, Rng& rng) {
  return 0.9 +
         0.1 * rng.beta(cfg.confidence_alpha, cfg.confidence_beta);
}

// Diagonal of the pixel bounding box over in-front projections.
double projected_diag(const Keypoints2D& kp) {
  const double inf = std::numeric_limits<double>::infinity();
  double lo_u = inf, lo_v = inf, hi_u = -inf, hi_v = -inf;
  for (int k = 0; k < kNumKeypoints; ++k) {
    if (!kp.in_front[k]) continue;
    lo_u = std::min(lo_u, kp.pts(k, 0));
    hi_u = std::max(hi_u, kp.pts(k, 0));
    lo_v = std::min(lo_v, kp.pts(k, 1));
    hi_v = std::max(hi_v, kp.pts(k, 1));
  }
  if (lo_u > hi_u) return 0.0;  // nothing in front
  return std::hypot(hi_u - lo_u, hi_v - lo_v);
}

}  // namespace

std::array<bool, kNumParts> visible_parts(const Scene& scene,
                                          const CameraIntrinsics& intr,
                                          const CameraPose& pose,
                                          double min_fraction) {
  std::array<bool, kNumParts> vis{};
  for (const PartModel& part : scene.parts)
    vis[part.class_index] =
        part_visible(project(intr, pose, part.keypoints3d), min_fraction);
  return vis;
}

DetectionSet simulate(const Scene& scene, const CameraIntrinsics& intr,
                      const CameraPose& pose, const NoiseConfig& cfg,
                      Rng& rng) {
  DetectionSet ds;
  for (Keypoints2& kp : ds.keypoints) kp.setConstant(kMissingPixel);

  std::array<const PartModel*, kNumParts> parts{};  // order by class index
  for (const PartModel& p : scene.parts) parts[p.class_index] = &p;

  for (int j = 0; j < kNumParts; ++j) {
    const Keypoints2D kp = project(intr, pose, parts[j]->keypoints3d);
    const double diag = projected_diag(kp);
    bool detected = part_visible(kp, cfg.visibility_min_fraction);
    if (detected && cfg.min_diag_px > 0.0) detected = diag >= cfg.min_diag_px;
    if (detected && cfg.dropout_prob > 0.0)
      detected = rng.uniform() >= cfg.dropout_prob;
    if (!detected) {
      set_row(ds.probs, j, kNoObjectIndex, null_confidence(cfg, rng));
      continue;
    }
    double sigma = cfg.pixel_sigma;
    if (cfg.sigma_ref_diag_px > 0.0)
      sigma *= std::clamp(diag / cfg.sigma_ref_diag_px, cfg.sigma_min_frac,
                          1.0);
    set_row(ds.probs, j, j, detected_confidence(cfg, rng));
    for (int k = 0; k < kNumKeypoints; ++k) {
      if (!kp.in_front[k]) continue;  // stays kMissingPixel
      double u = kp.pts(k, 0);
      double v = kp.pts(k, 1);
      if (sigma > 0.0) {
        u += sigma * rng.normal();
        v += sigma * rng.normal();
      }
      ds.keypoints[j](k, 0) = u;
      ds.keypoints[j](k, 1) = v;
    }
  }
  set_row(ds.probs, kNoObjectIndex, kNoObjectIndex, null_confidence(cfg, rng));
  return ds;
}

DetectionSet misassign(const DetectionSet& ds,
                       const std::array<int, kNumClasses>& perm) {
  DetectionSet out;
  for (int j = 0; j < kNumClasses; ++j) {
    out.probs.row(perm[j]) = ds.probs.row(j);
    out.keypoints[perm[j]] = ds.keypoints[j];
  }
  return out;
}

std::array<int, kNumClasses> random_permutation(Rng& rng) {
  std::array<int, kNumClasses> perm;
  for (int i = 0; i < kNumClasses; ++i) perm[i] = i;
  for (int i = kNumClasses - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
  return perm;
}

}  // namespace posefuse
