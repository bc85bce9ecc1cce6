// Command-line front end: pose sampling, detector simulation, per-part
// estimation, fusion, end-to-end runs, ablation, and angle-quantile queries.
//
// Exit codes: 0 success, 2 bad configuration or input, 3 structurally valid
// but empty usable output (e.g. every frame gapped).

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "posefuse/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmpty = 3;

struct CommonOpts {
  std::string scene_path;
  std::string intrinsics_path;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_path;  // empty = stdout
};

void add_common(CLI::App* cmd, CommonOpts* opts, bool io = true) {
  if (io) {
    cmd->add_option("--scene", opts->scene_path, "Scene JSON (ship part boxes)");
    cmd->add_option("--intrinsics", opts->intrinsics_path,
                    "Camera intrinsics JSON");
  }
  cmd->add_option("--config", opts->config_path, "Pipeline config JSON");
  cmd->add_option("--seed", opts->seed, "Override the config seed");
  cmd->add_option("--out", opts->out_path, "Output path (default stdout)");
}

posefuse::PipelineConfig load_config(const CommonOpts& opts) {
  posefuse::PipelineConfig cfg;
  if (!opts.config_path.empty())
    cfg = posefuse::load_pipeline_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

posefuse::Scene load_scene_opt(const CommonOpts& opts) {
  return opts.scene_path.empty() ? posefuse::default_scene()
                                 : posefuse::load_scene(opts.scene_path);
}

posefuse::CameraIntrinsics load_intrinsics_opt(const CommonOpts& opts) {
  return opts.intrinsics_path.empty()
             ? posefuse::default_intrinsics()
             : posefuse::load_intrinsics(opts.intrinsics_path);
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string read_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error(std::string(what) + ": cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<posefuse::CameraPose> sample_or_load_poses(
    const std::string& poses_path, int n, const posefuse::PipelineConfig& cfg) {
  if (!poses_path.empty())
    return posefuse::poses_from_csv(read_input(poses_path, "poses"));
  std::vector<posefuse::CameraPose> poses;
  posefuse::Rng rng = posefuse::pose_stream_rng(cfg.seed);
  poses.reserve(n);
  for (int i = 0; i < n; ++i)
    poses.push_back(posefuse::sample_pose(cfg.sampler, rng));
  return poses;
}

// Aggregate-only report (the `report` subcommand cannot reconstruct the
// per-part table or the config echo from a frames CSV).
std::string aggregate_report_json(const posefuse::Report& rep) {
  nlohmann::json j;
  j["n_frames"] = rep.n_frames;
  j["n_gaps"] = rep.n_gaps;
  j["max_range_L"] = rep.max_range;
  j["mae_pos_m"] = rep.mae_pos;
  j["mae_rot_deg"] = rep.mae_rot_deg;
  j["mae_over_L_pct"] = rep.mae_over_l_pct;
  j["sigma_pos_m"] = rep.sigma_pos;
  j["coverage_3sigma"] = {{"position", rep.coverage_pos},
                          {"rotation", rep.coverage_rot}};
  j["mean_loss"] = rep.mean_loss;
  return j.dump(2) + "\n";
}

std::string per_part_json(const std::vector<posefuse::PartReportRow>& rows) {
  nlohmann::json j;
  j["per_part"] = nlohmann::json::array();
  for (const posefuse::PartReportRow& row : rows) {
    nlohmann::json r;
    r["class_index"] = row.class_index;
    r["name"] = row.name;
    r["frames"] = row.frames;
    r["excluded"] = row.excluded;
    r["mae_pos_m"] = row.mae_pos;
    r["max_pos_m"] = row.max_pos;
    r["mae_rot_deg"] = row.mae_rot_deg;
    r["max_rot_deg"] = row.max_rot_deg;
    j["per_part"].push_back(r);
  }
  return j.dump(2) + "\n";
}

int count_fused(const std::vector<posefuse::FrameRecord>& records) {
  int n = 0;
  for (const posefuse::FrameRecord& rec : records) n += rec.fused.has_value();
  return n;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-part monocular pose estimation and fusion pipeline"};
  app.require_subcommand(1);

  CommonOpts opts;
  int n_frames = -1;  // -1 = take from config
  std::string poses_path, detections_path, estimates_path, frames_path;
  std::string frames_out;
  double uq_d = 0.999, uq_p = 0.95, uq_s = -1.0, max_range = -1.0;

  CLI::App* sample = app.add_subcommand("sample-poses", "Sample camera poses to CSV");
  add_common(sample, &opts, false);
  sample->add_option("--n", n_frames, "Number of poses");

  CLI::App* simulate = app.add_subcommand("simulate", "Simulate detections for a pose CSV");
  add_common(simulate, &opts);
  simulate->add_option("--poses", poses_path, "Pose CSV")->required();

  CLI::App* estimate = app.add_subcommand("estimate", "Per-part EPnP+RANSAC from detections JSON");
  add_common(estimate, &opts);
  estimate->add_option("--detections", detections_path, "Detections JSON")->required();

  CLI::App* fuse_cmd = app.add_subcommand("fuse", "Gate and fuse per-part estimates JSON");
  add_common(fuse_cmd, &opts, false);
  fuse_cmd->add_option("--estimates", estimates_path, "Estimates JSON")->required();

  CLI::App* run = app.add_subcommand("run", "End-to-end sampled (or replayed) run; writes the report");
  add_common(run, &opts);
  run->add_option("--n", n_frames, "Number of frames (default from config)");
  run->add_option("--poses", poses_path, "Replay poses from CSV instead of sampling");
  run->add_option("--frames-out", frames_out, "Per-frame error CSV path");
  run->add_option("--max-range", max_range, "Range L for MAE/L (default: sampler L_max)");

  CLI::App* ablate = app.add_subcommand("ablate", "Single-part accuracy table (no fusion) for a run");
  add_common(ablate, &opts);
  ablate->add_option("--n", n_frames, "Number of frames (default from config)");
  ablate->add_option("--poses", poses_path, "Replay poses from CSV instead of sampling");

  CLI::App* uq = app.add_subcommand("uq", "Attitude-error quantile (degrees) for a dispersion level");
  uq->add_option("--d", uq_d, "Dispersion diagonal value in (0,1)");
  uq->add_option("--p", uq_p, "Quantile probability in (0,1)");
  uq->add_option("--s", uq_s, "Concentration (bypasses --d when >= 0)");
  uq->add_option("--out", opts.out_path, "Output path (default stdout)");

  CLI::App* report = app.add_subcommand("report", "Aggregate report from a frames CSV");
  report->add_option("--frames", frames_path, "Frames CSV")->required();
  report->add_option("--max-range", max_range, "Range L for MAE/L")->required();
  report->add_option("--out", opts.out_path, "Output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sample->parsed()) {
      const posefuse::PipelineConfig cfg = load_config(opts);
      const int n = n_frames >= 0 ? n_frames : cfg.n_frames;
      const auto poses = sample_or_load_poses("", n, cfg);
      write_output(opts.out_path, posefuse::poses_to_csv(poses));
      return poses.empty() ? kExitEmpty : kExitOk;
    }

    if (simulate->parsed()) {
      const posefuse::PipelineConfig cfg = load_config(opts);
      const posefuse::Scene scene = load_scene_opt(opts);
      const posefuse::CameraIntrinsics intr = load_intrinsics_opt(opts);
      const auto poses = posefuse::poses_from_csv(read_input(poses_path, "poses"));
      std::vector<posefuse::DetectionSet> frames;
      frames.reserve(poses.size());
      for (std::size_t i = 0; i < poses.size(); ++i) {
        posefuse::Rng rng =
            posefuse::frame_rng(cfg.seed, static_cast<int>(i)).split(0);
        frames.push_back(
            posefuse::simulate(scene, intr, poses[i], cfg.noise, rng));
      }
      write_output(opts.out_path, posefuse::detections_to_json(frames));
      return frames.empty() ? kExitEmpty : kExitOk;
    }

    if (estimate->parsed()) {
      const posefuse::PipelineConfig cfg = load_config(opts);
      const posefuse::Scene scene = load_scene_opt(opts);
      const posefuse::CameraIntrinsics intr = load_intrinsics_opt(opts);
      const auto frames =
          posefuse::detections_from_json(read_input(detections_path, "detections"));
      std::vector<std::vector<posefuse::PartPoseEstimate>> ests;
      ests.reserve(frames.size());
      int n_parts = 0;
      for (std::size_t i = 0; i < frames.size(); ++i) {
        posefuse::Rng rng =
            posefuse::frame_rng(cfg.seed, static_cast<int>(i)).split(1);
        ests.push_back(
            posefuse::estimate_parts(scene, intr, frames[i], cfg.ransac, rng));
        n_parts += static_cast<int>(ests.back().size());
      }
      write_output(opts.out_path, posefuse::estimates_to_json(ests));
      return n_parts == 0 ? kExitEmpty : kExitOk;
    }

    if (fuse_cmd->parsed()) {
      const posefuse::PipelineConfig cfg = load_config(opts);
      const auto frames =
          posefuse::estimates_from_json(read_input(estimates_path, "estimates"));
      std::vector<std::optional<posefuse::FusedPose>> fused;
      fused.reserve(frames.size());
      int n_ok = 0;
      for (const auto& parts : frames) {
        fused.push_back(posefuse::fuse(parts, cfg.fusion));
        n_ok += fused.back().has_value();
      }
      write_output(opts.out_path, posefuse::fused_to_json(fused));
      return n_ok == 0 ? kExitEmpty : kExitOk;
    }

    if (run->parsed() || ablate->parsed()) {
      const posefuse::PipelineConfig cfg = load_config(opts);
      const posefuse::Scene scene = load_scene_opt(opts);
      const posefuse::CameraIntrinsics intr = load_intrinsics_opt(opts);
      const int n = n_frames >= 0 ? n_frames : cfg.n_frames;
      const auto poses = sample_or_load_poses(poses_path, n, cfg);
      const auto records = posefuse::run_pipeline(scene, intr, poses, cfg);
      const double range = max_range > 0 ? max_range : cfg.sampler.camera_r_max;
      if (ablate->parsed()) {
        write_output(opts.out_path,
                     per_part_json(posefuse::ablate_single_object(records, scene)));
      } else {
        const posefuse::Report rep = posefuse::summarize(records, scene, range);
        write_output(opts.out_path, posefuse::report_to_json(rep, cfg));
        std::string csv_path = frames_out;
        if (csv_path.empty() && !opts.out_path.empty())
          csv_path = opts.out_path + ".frames.csv";
        if (!csv_path.empty())
          write_output(csv_path, posefuse::frames_to_csv(records));
      }
      return count_fused(records) == 0 ? kExitEmpty : kExitOk;
    }

    if (uq->parsed()) {
      double s = uq_s;
      if (s < 0) {
        if (uq_d <= 0.0 || uq_d >= 1.0)
          throw std::invalid_argument("uq: --d must lie in (0, 1)");
        s = posefuse::s_from_d(uq_d);
      }
      if (uq_p <= 0.0 || uq_p >= 1.0)
        throw std::invalid_argument("uq: --p must lie in (0, 1)");
      const double angle = posefuse::angle_quantile(s, uq_p);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6f\n", angle * 180.0 / M_PI);
      write_output(opts.out_path, buf);
      return kExitOk;
    }

    if (report->parsed()) {
      if (!(max_range > 0))
        throw std::invalid_argument("report: --max-range must be positive");
      const posefuse::Report rep = posefuse::report_from_frames_csv(
          read_input(frames_path, "frames"), max_range);
      write_output(opts.out_path, aggregate_report_json(rep));
      return rep.n_frames > rep.n_gaps ? kExitOk : kExitEmpty;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitConfig;  // no subcommand dispatched
}
