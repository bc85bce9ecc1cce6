#include "posefuse/camera.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace posefuse {

namespace {
constexpr double kFrontEps = 1e-6;  // minimum depth along -z, meters
}

CameraIntrinsics default_intrinsics() {
  CameraIntrinsics intr;
  intr.width = 640;
  intr.height = 480;
  intr.fx = 320.0 / std::tan(M_PI / 6.0);  // 60 deg horizontal FOV
  intr.fy = intr.fx;
  intr.cx = 319.5;
  intr.cy = 239.5;
  return intr;
}

bool project_extrinsic(const CameraIntrinsics& intr, const Mat3& r_bc,
                       const Vec3& t, const Vec3& p, Eigen::Vector2d* uv) {
  const Vec3 pc = r_bc * p + t;
  const double depth = -pc.z();
  if (depth <= kFrontEps) return false;
  uv->x() = intr.fx * (pc.x() / depth) + intr.cx;
  uv->y() = intr.cy - intr.fy * (pc.y() / depth);
  return true;
}

Keypoints2D project(const CameraIntrinsics& intr, const CameraPose& pose,
                    const Keypoints3& pts3d) {
  const Mat3 r_bc = pose.attitude.matrix().transpose();
  const Vec3 t = -(r_bc * pose.position);
  Keypoints2D out;
  for (int k = 0; k < kNumKeypoints; ++k) {
    Eigen::Vector2d uv;
    if (!project_extrinsic(intr, r_bc, t, pts3d.row(k).transpose(), &uv))
      continue;  // leaves in_front = in_image = false, pixels undefined
    out.in_front[k] = true;
    out.pts(k, 0) = uv.x();
    out.pts(k, 1) = uv.y();
    out.in_image[k] = uv.x() >= 0.0 && uv.x() < intr.width &&
                      uv.y() >= 0.0 && uv.y() < intr.height;
  }
  return out;
}

bool part_visible(const Keypoints2D& kp, double min_fraction) {
  int n = 0;
  for (int k = 0; k < kNumKeypoints; ++k)
    if (kp.in_front[k] && kp.in_image[k]) ++n;
  return n >= min_fraction * kNumKeypoints;
}

CameraIntrinsics parse_intrinsics(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("intrinsics: bad JSON: ") +
                                e.what());
  }
  CameraIntrinsics intr;
  try {
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    intr.width = j.at("width").get<int>();
    intr.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("intrinsics: ") + e.what());
  }
  if (!(intr.fx > 0) || !(intr.fy > 0))
    throw std::invalid_argument("intrinsics: fx, fy must be positive");
  if (intr.width <= 0 || intr.height <= 0)
    throw std::invalid_argument("intrinsics: width, height must be positive");
  return intr;
}

CameraIntrinsics load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("intrinsics: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_intrinsics(ss.str());
}

std::string intrinsics_to_json(const CameraIntrinsics& intr) {
  nlohmann::json j;
  j["fx"] = intr.fx;
  j["fy"] = intr.fy;
  j["cx"] = intr.cx;
  j["cy"] = intr.cy;
  j["width"] = intr.width;
  j["height"] = intr.height;
  return j.dump(2);
}

}  // namespace posefuse
