#pragma once

#include <optional>
#include <string>
#include <vector>

#include "posefuse/assignment.hpp"
#include "posefuse/camera.hpp"
#include "posefuse/detector.hpp"
#include "posefuse/fusion.hpp"
#include "posefuse/pnp.hpp"
#include "posefuse/rng.hpp"
#include "posefuse/sampler.hpp"
#include "posefuse/scene.hpp"

namespace posefuse {

struct PipelineConfig {
  std::uint64_t seed = 42;
  int n_frames = 100;
  double gamma = 10.0;  // keypoint-loss weight
  SamplerConfig sampler;
  NoiseConfig noise;
  RansacConfig ransac;
  FusionConfig fusion;
};

/// Everything measured on one frame. Gap frames (nothing past the fusion
/// gate) leave `fused` empty and the error fields NaN.
struct FrameRecord {
  int frame_id = 0;
  CameraPose true_pose;
  std::optional<FusedPose> fused;
  std::vector<PartPoseEstimate> per_part;  // successful estimates, by class
  double pos_error = 0.0;   // m, fused camera position vs truth
  double rot_error = 0.0;   // rad, ||eta||
  AxisAngleVec eta = AxisAngleVec::Zero();  // log(U^T R_true V)
  Vec3 pos_error_vec = Vec3::Zero();        // C_hat - C_true, base frame
  bool cov_pos = false;  // |mu_t - t_true| within 3 sqrt(diag sigma_t)
  bool cov_rot = false;  // |eta| within 3 sqrt(diag sigma_eta), per axis
  double loss = 0.0;     // set-prediction loss of the simulated detections
};

struct PartReportRow {
  int class_index = -1;
  std::string name;
  int frames = 0;    // frames where this class survived the gate
  int excluded = 0;  // frames where it did not
  double mae_pos = 0.0, max_pos = 0.0;          // m
  double mae_rot_deg = 0.0, max_rot_deg = 0.0;  // deg
};

struct Report {
  int n_frames = 0;
  int n_gaps = 0;
  double max_range = 0.0;  // L, m
  double mae_pos = 0.0;    // m, over fused frames
  double mae_rot_deg = 0.0;
  double mae_over_l_pct = 0.0;  // 100 mae_pos / L
  double sigma_pos = 0.0;  // norm of the per-axis position-error stds, m
  double coverage_pos = 0.0, coverage_rot = 0.0;
  double mean_loss = 0.0;
  std::vector<PartReportRow> per_part;
};

/// Deterministic per-frame RNG stream: independent of thread count and of
/// every other frame. Stream 0 of the root seed feeds pose sampling.
Rng pose_stream_rng(std::uint64_t seed);
Rng frame_rng(std::uint64_t seed, int frame_id);

/// Per-part pose recovery from one detection set: every query row whose
/// argmax is a real class claims that class (ties between rows resolved by
/// confidence, then lower row); keypoints inside the image rectangle form
/// the valid mask handed to RANSAC. Results ordered by class index.
std::vector<PartPoseEstimate> estimate_parts(const Scene& scene,
                                             const CameraIntrinsics& intr,
                                             const DetectionSet& ds,
                                             const RansacConfig& cfg,
                                             Rng& rng);

/// Simulate, match, estimate, and fuse one frame.
FrameRecord process_frame(const Scene& scene, const CameraIntrinsics& intr,
                          const CameraPose& pose, int frame_id,
                          const PipelineConfig& cfg);

/// All frames, processed by a worker pool (POSEFUSE_THREADS caps the
/// width); output ordered by position in `poses` regardless of scheduling.
std::vector<FrameRecord> run_pipeline(const Scene& scene,
                                      const CameraIntrinsics& intr,
                                      const std::vector<CameraPose>& poses,
                                      const PipelineConfig& cfg);

/// Aggregate MAEs, dispersion, coverage, gaps, and the per-part ablation.
Report summarize(const std::vector<FrameRecord>& records, const Scene& scene,
                 double max_range);

/// Per-class accuracy without fusion: each class's own estimate, over the
/// frames where it survived the gate.
std::vector<PartReportRow> ablate_single_object(
    const std::vector<FrameRecord>& records, const Scene& scene);

/// Fractions of fused frames whose position (t-space) and rotation
/// (eta-space) errors fall component-wise within 3 sigma.
std::pair<double, double> coverage_3sigma(
    const std::vector<FrameRecord>& records);

PipelineConfig parse_pipeline_config(const std::string& json_text);
PipelineConfig load_pipeline_config(const std::string& path);

std::string report_to_json(const Report& report,
                           const PipelineConfig& cfg);

/// Per-frame CSV (17-digit doubles, so a reread reproduces the report
/// bit-for-bit); gap frames leave the error columns empty.
std::string frames_to_csv(const std::vector<FrameRecord>& records);

/// Rebuild the aggregate half of a Report from a frames CSV. Per-part
/// rows are not in the CSV and stay empty.
Report report_from_frames_csv(const std::string& csv_text, double max_range);

std::string poses_to_csv(const std::vector<CameraPose>& poses);
/// Accepts the sampler schema with an optional trailing timestamp column.
std::vector<CameraPose> poses_from_csv(const std::string& csv_text);

std::string detections_to_json(const std::vector<DetectionSet>& frames);
std::vector<DetectionSet> detections_from_json(const std::string& json_text);

std::string estimates_to_json(
    const std::vector<std::vector<PartPoseEstimate>>& frames);
std::vector<std::vector<PartPoseEstimate>> estimates_from_json(
    const std::string& json_text);

std::string fused_to_json(
    const std::vector<std::optional<FusedPose>>& frames);

}  // namespace posefuse
