#include "posefuse/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace posefuse {

namespace {

double deg(double rad) { return rad * 180.0 / M_PI; }

// 17 significant digits: parses back to the identical double, which keeps
// CSV-based recomputation bit-exact.
std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

nlohmann::json mat3_json(const Mat3& m) {
  nlohmann::json a = nlohmann::json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) a.push_back(m(r, c));
  return a;
}

nlohmann::json vec3_json(const Vec3& v) {
  return nlohmann::json::array({v(0), v(1), v(2)});
}

Mat3 mat3_from(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 9)
    throw std::invalid_argument("expected a 9-element row-major matrix");
  Mat3 m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = a.at(3 * r + c).get<double>();
  return m;
}

Vec3 vec3_from(const nlohmann::json& a) {
  if (!a.is_array() || a.size() != 3)
    throw std::invalid_argument("expected a 3-element vector");
  return Vec3(a.at(0).get<double>(), a.at(1).get<double>(),
              a.at(2).get<double>());
}

void check_keys(const nlohmann::json& j,
                std::initializer_list<const char*> allowed,
                const char* where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        ok = true;
        break;
      }
    if (!ok)
      throw std::invalid_argument("config: unknown key \"" + it.key() +
                                  "\" in " + where);
  }
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(std::string(what) + ": cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int worker_count(int n_tasks) {
  const unsigned hw = std::thread::hardware_concurrency();
  int n = hw ? static_cast<int>(hw) : 1;
  if (const char* env = std::getenv("POSEFUSE_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw std::invalid_argument(
          "POSEFUSE_THREADS must be a positive integer");
    n = static_cast<int>(std::min<long>(v, 1024));
  }
  return std::max(1, std::min(n, n_tasks));
}

}  // namespace

Rng pose_stream_rng(std::uint64_t seed) { return Rng(seed).split(0); }

Rng frame_rng(std::uint64_t seed, int frame_id) {
  return Rng(seed).split(1).split(static_cast<std::uint64_t>(frame_id));
}

std::vector<PartPoseEstimate> estimate_parts(const Scene& scene,
                                             const CameraIntrinsics& intr,
                                             const DetectionSet& ds,
                                             const RansacConfig& cfg,
                                             Rng& rng) {
  // Each query claims its argmax class; the most confident row wins a
  // contested class (earlier row on exact ties).
  std::array<int, kNumParts> claimant;
  claimant.fill(-1);
  for (int q = 0; q < kNumClasses; ++q) {
    Eigen::Index cls;
    ds.probs.row(q).maxCoeff(&cls);
    if (cls == kNoObjectIndex) continue;
    const int c = static_cast<int>(cls);
    if (claimant[c] < 0 || ds.probs(q, c) > ds.probs(claimant[c], c))
      claimant[c] = q;
  }

  std::array<const PartModel*, kNumParts> parts{};
  for (const PartModel& p : scene.parts) parts[p.class_index] = &p;

  std::vector<PartPoseEstimate> out;
  for (int c = 0; c < kNumParts; ++c) {
    const int q = claimant[c];
    if (q < 0) continue;
    std::array<bool, kNumKeypoints> valid{};
    for (int k = 0; k < kNumKeypoints; ++k) {
      const double u = ds.keypoints[q](k, 0);
      const double v = ds.keypoints[q](k, 1);
      valid[k] =
          u >= 0.0 && u < intr.width && v >= 0.0 && v < intr.height;
    }
    Rng part_rng = rng.split(static_cast<std::uint64_t>(c));
    auto est =
        estimate_pose(parts[c]->keypoints3d, ds.keypoints[q], valid, intr,
                      cfg, part_rng);
    if (!est) continue;
    est->class_index = c;
    est->confidence = ds.probs(q, c);
    out.push_back(*est);
  }
  return out;
}

FrameRecord process_frame(const Scene& scene, const CameraIntrinsics& intr,
                          const CameraPose& pose, int frame_id,
                          const PipelineConfig& cfg) {
  FrameRecord rec;
  rec.frame_id = frame_id;
  rec.true_pose = pose;

  Rng frng = frame_rng(cfg.seed, frame_id);
  Rng sim_rng = frng.split(0);
  const DetectionSet ds = simulate(scene, intr, pose, cfg.noise, sim_rng);

  // Set-prediction loss against ground truth.
  const std::array<bool, kNumParts> vis =
      visible_parts(scene, intr, pose, cfg.noise.visibility_min_fraction);
  std::array<const PartModel*, kNumParts> parts{};
  for (const PartModel& p : scene.parts) parts[p.class_index] = &p;
  GroundTruthFrame gt;
  gt.c_g = ground_truth_labels(scene, vis);
  for (Keypoints2& kp : gt.keypoints) kp.setConstant(kMissingPixel);
  for (int c = 0; c < kNumParts; ++c) {
    if (!gt.c_g[c]) continue;
    const Keypoints2D proj = project(intr, pose, parts[c]->keypoints3d);
    for (int k = 0; k < kNumKeypoints; ++k)
      if (proj.in_front[k]) gt.keypoints[c].row(k) = proj.pts.row(k);
  }
  const MatchResult match = hungarian_match(ds.probs, gt.c_g);
  rec.loss = keypoint_loss(match, ds.probs, ds.keypoints, gt, cfg.gamma);

  Rng est_rng = frng.split(1);
  rec.per_part = estimate_parts(scene, intr, ds, cfg.ransac, est_rng);
  rec.fused = fuse(rec.per_part, cfg.fusion);

  if (!rec.fused) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    rec.pos_error = rec.rot_error = nan;
    rec.eta.setConstant(nan);
    rec.pos_error_vec.setConstant(nan);
    return rec;
  }
  const FusedPose& f = *rec.fused;
  const Mat3 r_true = pose.attitude.matrix().transpose();  // base -> camera
  const Vec3 c_hat = -(f.mu_r.matrix().transpose() * f.mu_t);
  rec.pos_error_vec = c_hat - pose.position;
  rec.pos_error = rec.pos_error_vec.norm();
  rec.eta = log_so3(f.svd.u.inverse() *
                    Rotation::from_matrix_unchecked(r_true) * f.svd.v);
  rec.rot_error = rec.eta.norm();

  const Vec3 t_err = f.mu_t - (-(r_true * pose.position));
  rec.cov_pos = rec.cov_rot = true;
  for (int i = 0; i < 3; ++i) {
    if (std::fabs(t_err(i)) >
        3.0 * std::sqrt(std::max(f.sigma_t(i, i), 0.0)))
      rec.cov_pos = false;
    if (std::fabs(rec.eta(i)) >
        3.0 * std::sqrt(std::max(f.sigma_eta(i, i), 0.0)))
      rec.cov_rot = false;
  }
  return rec;
}

std::vector<FrameRecord> run_pipeline(const Scene& scene,
                                      const CameraIntrinsics& intr,
                                      const std::vector<CameraPose>& poses,
                                      const PipelineConfig& cfg) {
  const int n = static_cast<int>(poses.size());
  std::vector<FrameRecord> records(n);
  if (n == 0) return records;
  const int workers = worker_count(n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i)
      records[i] = process_frame(scene, intr, poses[i], i, cfg);
    return records;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  const auto work = [&] {
    try {
      for (int i; (i = next.fetch_add(1)) < n;)
        records[i] = process_frame(scene, intr, poses[i], i, cfg);
    } catch (...) {
      const std::lock_guard<std::mutex> lock(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
  return records;
}

std::vector<PartReportRow> ablate_single_object(
    const std::vector<FrameRecord>& records, const Scene& scene) {
  std::vector<PartReportRow> rows(kNumParts);
  for (const PartModel& p : scene.parts) {
    rows[p.class_index].class_index = p.class_index;
    rows[p.class_index].name = p.name;
  }
  std::array<double, kNumParts> pos_sum{}, rot_sum{};
  for (const FrameRecord& rec : records) {
    std::array<bool, kNumParts> used{};
    if (rec.fused) {
      const Rotation r_true_bc = Rotation::from_matrix_unchecked(
          rec.true_pose.attitude.matrix().transpose());
      for (int idx : rec.fused->kept) {
        const PartPoseEstimate& e = rec.per_part[idx];
        PartReportRow& row = rows[e.class_index];
        used[e.class_index] = true;
        const Vec3 c_hat =
            -(e.rotation.matrix().transpose() * e.translation);
        const double pe = (c_hat - rec.true_pose.position).norm();
        const double re = geodesic_angle(e.rotation, r_true_bc);
        ++row.frames;
        pos_sum[e.class_index] += pe;
        rot_sum[e.class_index] += deg(re);
        row.max_pos = std::max(row.max_pos, pe);
        row.max_rot_deg = std::max(row.max_rot_deg, deg(re));
      }
    }
    for (int c = 0; c < kNumParts; ++c)
      if (!used[c]) ++rows[c].excluded;
  }
  for (int c = 0; c < kNumParts; ++c) {
    if (rows[c].frames > 0) {
      rows[c].mae_pos = pos_sum[c] / rows[c].frames;
      rows[c].mae_rot_deg = rot_sum[c] / rows[c].frames;
    }
  }
  return rows;
}

std::pair<double, double> coverage_3sigma(
    const std::vector<FrameRecord>& records) {
  int n = 0, cp = 0, cr = 0;
  for (const FrameRecord& rec : records) {
    if (!rec.fused) continue;
    ++n;
    cp += rec.cov_pos;
    cr += rec.cov_rot;
  }
  if (n == 0) return {0.0, 0.0};
  return {static_cast<double>(cp) / n, static_cast<double>(cr) / n};
}

Report summarize(const std::vector<FrameRecord>& records, const Scene& scene,
                 double max_range) {
  Report rep;
  rep.n_frames = static_cast<int>(records.size());
  rep.max_range = max_range;
  double pos_sum = 0.0, rot_sum_deg = 0.0, loss_sum = 0.0;
  Vec3 e_sum = Vec3::Zero();
  int fused_n = 0;
  for (const FrameRecord& rec : records) {
    loss_sum += rec.loss;
    if (!rec.fused) {
      ++rep.n_gaps;
      continue;
    }
    ++fused_n;
    pos_sum += rec.pos_error;
    rot_sum_deg += deg(rec.rot_error);
    e_sum += rec.pos_error_vec;
  }
  if (rep.n_frames > 0) rep.mean_loss = loss_sum / rep.n_frames;
  if (fused_n > 0) {
    rep.mae_pos = pos_sum / fused_n;
    rep.mae_rot_deg = rot_sum_deg / fused_n;
    rep.mae_over_l_pct = 100.0 * rep.mae_pos / max_range;
    const Vec3 mean = e_sum / fused_n;
    Vec3 var = Vec3::Zero();
    for (const FrameRecord& rec : records)
      if (rec.fused) var += (rec.pos_error_vec - mean).cwiseAbs2();
    var /= fused_n;
    rep.sigma_pos = var.cwiseSqrt().norm();
    std::tie(rep.coverage_pos, rep.coverage_rot) = coverage_3sigma(records);
  }
  rep.per_part = ablate_single_object(records, scene);
  return rep;
}

PipelineConfig parse_pipeline_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: bad JSON: ") + e.what());
  }
  PipelineConfig cfg;
  try {
    check_keys(j, {"seed", "n_frames", "gamma", "sampler", "noise", "ransac",
                   "fusion"},
               "top level");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.n_frames = j.value("n_frames", cfg.n_frames);
    cfg.gamma = j.value("gamma", cfg.gamma);
    if (j.contains("sampler")) {
      const nlohmann::json& s = j["sampler"];
      check_keys(s,
                 {"L_max", "phi_max", "psi_max", "camera_r_mean",
                  "camera_r_std", "focus_r_mean", "focus_r_std",
                  "focus_r_max"},
                 "sampler");
      SamplerConfig& sc = cfg.sampler;
      sc.camera_r_max = s.value("L_max", sc.camera_r_max);
      sc.camera_phi_max = s.value("phi_max", sc.camera_phi_max);
      sc.psi_max = s.value("psi_max", sc.psi_max);
      sc.camera_r_mean = s.value("camera_r_mean", sc.camera_r_mean);
      sc.camera_r_std = s.value("camera_r_std", sc.camera_r_std);
      sc.focus_r_mean = s.value("focus_r_mean", sc.focus_r_mean);
      sc.focus_r_std = s.value("focus_r_std", sc.focus_r_std);
      sc.focus_r_max = s.value("focus_r_max", sc.focus_r_max);
    }
    if (j.contains("noise")) {
      const nlohmann::json& s = j["noise"];
      check_keys(s,
                 {"pixel_sigma", "sigma_ref_diag_px", "sigma_min_frac",
                  "confidence_alpha", "confidence_beta", "confidence_floor",
                  "dropout_prob", "min_diag_px", "visibility_min_fraction"},
                 "noise");
      NoiseConfig& nc = cfg.noise;
      nc.pixel_sigma = s.value("pixel_sigma", nc.pixel_sigma);
      nc.sigma_ref_diag_px = s.value("sigma_ref_diag_px", nc.sigma_ref_diag_px);
      nc.sigma_min_frac = s.value("sigma_min_frac", nc.sigma_min_frac);
      nc.confidence_alpha = s.value("confidence_alpha", nc.confidence_alpha);
      nc.confidence_beta = s.value("confidence_beta", nc.confidence_beta);
      nc.confidence_floor = s.value("confidence_floor", nc.confidence_floor);
      nc.dropout_prob = s.value("dropout_prob", nc.dropout_prob);
      nc.min_diag_px = s.value("min_diag_px", nc.min_diag_px);
      nc.visibility_min_fraction =
          s.value("visibility_min_fraction", nc.visibility_min_fraction);
    }
    if (j.contains("ransac")) {
      const nlohmann::json& s = j["ransac"];
      check_keys(s,
                 {"max_iterations", "inlier_threshold", "min_inliers",
                  "sample_size"},
                 "ransac");
      RansacConfig& rc = cfg.ransac;
      rc.max_iterations = s.value("max_iterations", rc.max_iterations);
      rc.inlier_threshold = s.value("inlier_threshold", rc.inlier_threshold);
      rc.min_inliers = s.value("min_inliers", rc.min_inliers);
      rc.sample_size = s.value("sample_size", rc.sample_size);
    }
    if (j.contains("fusion")) {
      const nlohmann::json& s = j["fusion"];
      check_keys(s, {"gate", "d_index", "empirical_sigma_eta"}, "fusion");
      FusionConfig& fc = cfg.fusion;
      fc.gate = s.value("gate", fc.gate);
      fc.d_index = s.value("d_index", fc.d_index);
      fc.empirical_sigma_eta =
          s.value("empirical_sigma_eta", fc.empirical_sigma_eta);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }

  if (cfg.n_frames < 0)
    throw std::invalid_argument("config: n_frames must be >= 0");
  if (!(cfg.gamma > 0))
    throw std::invalid_argument("config: gamma must be positive");
  const SamplerConfig& sc = cfg.sampler;
  if (!(sc.camera_r_max > 0) || !(sc.focus_r_max > 0) ||
      !(sc.camera_r_std > 0) || !(sc.focus_r_std > 0))
    throw std::invalid_argument(
        "config: sampler ranges and stddevs must be positive");
  const NoiseConfig& nc = cfg.noise;
  if (nc.pixel_sigma < 0)
    throw std::invalid_argument("config: pixel_sigma must be >= 0");
  if (nc.sigma_ref_diag_px < 0)
    throw std::invalid_argument("config: sigma_ref_diag_px must be >= 0");
  if (nc.sigma_min_frac < 0 || nc.sigma_min_frac > 1)
    throw std::invalid_argument("config: sigma_min_frac must lie in [0, 1]");
  if (nc.dropout_prob < 0 || nc.dropout_prob > 1 ||
      nc.confidence_floor < 0 || nc.confidence_floor > 1 ||
      nc.visibility_min_fraction < 0 || nc.visibility_min_fraction > 1)
    throw std::invalid_argument("config: probabilities must lie in [0, 1]");
  if (!(nc.confidence_alpha > 0) || !(nc.confidence_beta > 0))
    throw std::invalid_argument(
        "config: confidence Beta parameters must be positive");
  const RansacConfig& rc = cfg.ransac;
  if (rc.sample_size < 4)
    throw std::invalid_argument("config: ransac sample_size must be >= 4");
  if (rc.min_inliers < rc.sample_size)
    throw std::invalid_argument(
        "config: ransac min_inliers must be >= sample_size");
  if (rc.max_iterations < 1)
    throw std::invalid_argument("config: ransac max_iterations must be >= 1");
  if (!(rc.inlier_threshold > 0))
    throw std::invalid_argument(
        "config: ransac inlier_threshold must be positive");
  const FusionConfig& fc = cfg.fusion;
  if (fc.gate < 0 || fc.gate > 1)
    throw std::invalid_argument("config: fusion gate must lie in [0, 1]");
  if (fc.d_index < 0 || fc.d_index > 2)
    throw std::invalid_argument("config: fusion d_index must be 0, 1, or 2");
  return cfg;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  return parse_pipeline_config(read_file(path, "config"));
}

std::string report_to_json(const Report& rep, const PipelineConfig& cfg) {
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
  j["per_part"] = nlohmann::json::array();
  for (const PartReportRow& row : rep.per_part) {
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
  j["config"] = {
      {"seed", cfg.seed},
      {"n_frames", cfg.n_frames},
      {"gamma", cfg.gamma},
      {"sampler",
       {{"L_max", cfg.sampler.camera_r_max},
        {"phi_max", cfg.sampler.camera_phi_max},
        {"psi_max", cfg.sampler.psi_max},
        {"camera_r_mean", cfg.sampler.camera_r_mean},
        {"camera_r_std", cfg.sampler.camera_r_std},
        {"focus_r_mean", cfg.sampler.focus_r_mean},
        {"focus_r_std", cfg.sampler.focus_r_std},
        {"focus_r_max", cfg.sampler.focus_r_max}}},
      {"noise",
       {{"pixel_sigma", cfg.noise.pixel_sigma},
        {"sigma_ref_diag_px", cfg.noise.sigma_ref_diag_px},
        {"sigma_min_frac", cfg.noise.sigma_min_frac},
        {"confidence_alpha", cfg.noise.confidence_alpha},
        {"confidence_beta", cfg.noise.confidence_beta},
        {"confidence_floor", cfg.noise.confidence_floor},
        {"dropout_prob", cfg.noise.dropout_prob},
        {"min_diag_px", cfg.noise.min_diag_px},
        {"visibility_min_fraction", cfg.noise.visibility_min_fraction}}},
      {"ransac",
       {{"max_iterations", cfg.ransac.max_iterations},
        {"inlier_threshold", cfg.ransac.inlier_threshold},
        {"min_inliers", cfg.ransac.min_inliers},
        {"sample_size", cfg.ransac.sample_size}}},
      {"fusion",
       {{"gate", cfg.fusion.gate},
        {"d_index", cfg.fusion.d_index},
        {"empirical_sigma_eta", cfg.fusion.empirical_sigma_eta}}}};
  return j.dump(2) + "\n";
}

std::string frames_to_csv(const std::vector<FrameRecord>& records) {
  std::ostringstream out;
  out << "frame_id,range_m,gap,pos_error_m,rot_error_deg,ex_m,ey_m,ez_m,"
         "eta_x,eta_y,eta_z,cov_pos,cov_rot,n_inliers,loss\n";
  for (const FrameRecord& rec : records) {
    out << rec.frame_id << ',' << fmt17(rec.true_pose.position.norm()) << ',';
    if (!rec.fused) {
      out << "1,,,,,,,,,,,0," << fmt17(rec.loss) << '\n';
      continue;
    }
    out << "0," << fmt17(rec.pos_error) << ',' << fmt17(deg(rec.rot_error));
    for (int i = 0; i < 3; ++i) out << ',' << fmt17(rec.pos_error_vec(i));
    for (int i = 0; i < 3; ++i) out << ',' << fmt17(rec.eta(i));
    out << ',' << (rec.cov_pos ? 1 : 0) << ',' << (rec.cov_rot ? 1 : 0) << ','
        << rec.fused->n_inliers << ',' << fmt17(rec.loss) << '\n';
  }
  return out.str();
}

Report report_from_frames_csv(const std::string& csv_text, double max_range) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("frames csv: empty input");
  Report rep;
  rep.max_range = max_range;
  double pos_sum = 0.0, rot_sum_deg = 0.0, loss_sum = 0.0;
  Vec3 e_sum = Vec3::Zero();
  std::vector<Vec3> errors;
  int cp = 0, cr = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) f.push_back(item);
    while (f.size() < 15) f.push_back("");
    ++rep.n_frames;
    loss_sum += std::stod(f[14]);
    if (f[2] == "1") {
      ++rep.n_gaps;
      continue;
    }
    pos_sum += std::stod(f[3]);
    rot_sum_deg += std::stod(f[4]);
    const Vec3 e(std::stod(f[5]), std::stod(f[6]), std::stod(f[7]));
    e_sum += e;
    errors.push_back(e);
    cp += (f[11] == "1");
    cr += (f[12] == "1");
  }
  if (rep.n_frames > 0) rep.mean_loss = loss_sum / rep.n_frames;
  const int fused_n = static_cast<int>(errors.size());
  if (fused_n > 0) {
    rep.mae_pos = pos_sum / fused_n;
    rep.mae_rot_deg = rot_sum_deg / fused_n;
    rep.mae_over_l_pct = 100.0 * rep.mae_pos / max_range;
    const Vec3 mean = e_sum / fused_n;
    Vec3 var = Vec3::Zero();
    for (const Vec3& e : errors) var += (e - mean).cwiseAbs2();
    var /= fused_n;
    rep.sigma_pos = var.cwiseSqrt().norm();
    rep.coverage_pos = static_cast<double>(cp) / fused_n;
    rep.coverage_rot = static_cast<double>(cr) / fused_n;
  }
  return rep;
}

std::string poses_to_csv(const std::vector<CameraPose>& poses) {
  std::ostringstream out;
  out << "frame_id,cx,cy,cz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out << i;
    for (int k = 0; k < 3; ++k) out << ',' << fmt17(poses[i].position(k));
    const Mat3& m = poses[i].attitude.matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << ',' << fmt17(m(r, c));
    out << '\n';
  }
  return out.str();
}

std::vector<CameraPose> poses_from_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line))
    throw std::invalid_argument("poses csv: empty input");
  std::vector<CameraPose> poses;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> f;
    std::string item;
    std::istringstream ls(line);
    while (std::getline(ls, item, ',')) f.push_back(std::stod(item));
    if (f.size() != 13 && f.size() != 14)  // optional trailing timestamp
      throw std::invalid_argument(
          "poses csv: expected 13 or 14 columns per row");
    CameraPose pose;
    pose.position = Vec3(f[1], f[2], f[3]);
    Mat3 m;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) m(r, c) = f[4 + 3 * r + c];
    pose.attitude = Rotation::from_matrix(m);
    poses.push_back(pose);
  }
  return poses;
}

std::string detections_to_json(const std::vector<DetectionSet>& frames) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    nlohmann::json f;
    f["frame_id"] = i;
    f["probs"] = nlohmann::json::array();
    for (int q = 0; q < kNumClasses; ++q) {
      nlohmann::json row = nlohmann::json::array();
      for (int c = 0; c < kNumClasses; ++c) row.push_back(frames[i].probs(q, c));
      f["probs"].push_back(row);
    }
    f["keypoints"] = nlohmann::json::array();
    for (int q = 0; q < kNumClasses; ++q) {
      nlohmann::json kps = nlohmann::json::array();
      for (int k = 0; k < kNumKeypoints; ++k)
        kps.push_back({frames[i].keypoints[q](k, 0),
                       frames[i].keypoints[q](k, 1)});
      f["keypoints"].push_back(kps);
    }
    j["frames"].push_back(f);
  }
  return j.dump(2) + "\n";
}

std::vector<DetectionSet> detections_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("detections: bad JSON: ") +
                                e.what());
  }
  std::vector<DetectionSet> frames;
  try {
    for (const nlohmann::json& f : j.at("frames")) {
      DetectionSet ds;
      const nlohmann::json& probs = f.at("probs");
      const nlohmann::json& kps = f.at("keypoints");
      if (probs.size() != kNumClasses || kps.size() != kNumClasses)
        throw std::invalid_argument("detections: need 7 rows per frame");
      for (int q = 0; q < kNumClasses; ++q) {
        if (probs.at(q).size() != kNumClasses ||
            kps.at(q).size() != kNumKeypoints)
          throw std::invalid_argument("detections: bad row shape");
        double sum = 0.0;
        for (int c = 0; c < kNumClasses; ++c) {
          const double p = probs.at(q).at(c).get<double>();
          if (p < 0.0 || p > 1.0)
            throw std::invalid_argument(
                "detections: probabilities must lie in [0, 1]");
          ds.probs(q, c) = p;
          sum += p;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
          throw std::invalid_argument("detections: rows must sum to 1");
        for (int k = 0; k < kNumKeypoints; ++k) {
          ds.keypoints[q](k, 0) = kps.at(q).at(k).at(0).get<double>();
          ds.keypoints[q](k, 1) = kps.at(q).at(k).at(1).get<double>();
        }
      }
      frames.push_back(ds);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("detections: ") + e.what());
  }
  return frames;
}

std::string estimates_to_json(
    const std::vector<std::vector<PartPoseEstimate>>& frames) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    nlohmann::json f;
    f["frame_id"] = i;
    f["parts"] = nlohmann::json::array();
    for (const PartPoseEstimate& e : frames[i]) {
      nlohmann::json p;
      p["class_index"] = e.class_index;
      p["confidence"] = e.confidence;
      p["R"] = mat3_json(e.rotation.matrix());
      p["t"] = vec3_json(e.translation);
      int n_in = 0;
      for (bool b : e.inliers) n_in += b;
      p["inliers"] = n_in;
      p["reproj_px"] = e.reproj_error;
      f["parts"].push_back(p);
    }
    j["frames"].push_back(f);
  }
  return j.dump(2) + "\n";
}

std::vector<std::vector<PartPoseEstimate>> estimates_from_json(
    const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("estimates: bad JSON: ") +
                                e.what());
  }
  std::vector<std::vector<PartPoseEstimate>> frames;
  try {
    for (const nlohmann::json& f : j.at("frames")) {
      std::vector<PartPoseEstimate> parts;
      for (const nlohmann::json& p : f.at("parts")) {
        PartPoseEstimate e;
        e.class_index = p.at("class_index").get<int>();
        e.confidence = p.at("confidence").get<double>();
        e.rotation = Rotation::from_matrix(mat3_from(p.at("R")));
        e.translation = vec3_from(p.at("t"));
        e.reproj_error = p.value("reproj_px", 0.0);
        parts.push_back(e);  // the inlier mask is not serialized
      }
      frames.push_back(std::move(parts));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("estimates: ") + e.what());
  }
  return frames;
}

std::string fused_to_json(
    const std::vector<std::optional<FusedPose>>& frames) {
  nlohmann::json j;
  j["frames"] = nlohmann::json::array();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    nlohmann::json f;
    f["frame_id"] = i;
    if (!frames[i]) {
      f["gap"] = true;
    } else {
      const FusedPose& fp = *frames[i];
      f["gap"] = false;
      f["mu_t"] = vec3_json(fp.mu_t);
      f["sigma_t"] = mat3_json(fp.sigma_t);
      f["mu_r"] = mat3_json(fp.mu_r.matrix());
      f["d"] = vec3_json(fp.svd.d);
      f["sigma_eta"] = mat3_json(fp.sigma_eta);
      f["n_inliers"] = fp.n_inliers;
      f["weights"] = fp.weights;
    }
    j["frames"].push_back(f);
  }
  return j.dump(2) + "\n";
}

}  // namespace posefuse
