#include "posefuse/scene.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace posefuse {

namespace {

// Corner-index pairs differing in exactly one bit, lexicographically sorted.
constexpr int kEdges[12][2] = {{0, 1}, {0, 2}, {0, 4}, {1, 3}, {1, 5}, {2, 3},
                               {2, 6}, {3, 7}, {4, 5}, {4, 6}, {5, 7}, {6, 7}};

}  // namespace

Keypoints3 keypoints_from_corners(const std::array<Vec3, 8>& corners) {
  Keypoints3 out;
  for (int i = 0; i < 8; ++i) out.row(i) = corners[i].transpose();
  int k = 8;
  for (const auto& e : kEdges) {
    const Vec3& a = corners[e[0]];
    const Vec3& b = corners[e[1]];
    out.row(k++) = ((2.0 / 3.0) * a + (1.0 / 3.0) * b).transpose();
    out.row(k++) = ((1.0 / 3.0) * a + (2.0 / 3.0) * b).transpose();
  }
  return out;
}

Keypoints3 keypoints_from_box(const Vec3& min_corner, const Vec3& max_corner) {
  if (!((min_corner.array() < max_corner.array()).all()))
    throw std::invalid_argument("keypoints_from_box: degenerate box");
  std::array<Vec3, 8> corners;
  for (int idx = 0; idx < 8; ++idx) {
    const int bx = (idx >> 2) & 1;
    const int by = (idx >> 1) & 1;
    const int bz = idx & 1;
    corners[idx] = Vec3(bx ? max_corner.x() : min_corner.x(),
                        by ? max_corner.y() : min_corner.y(),
                        bz ? max_corner.z() : min_corner.z());
  }
  return keypoints_from_corners(corners);
}

ClassLabels ground_truth_labels(const Scene& scene,
                                const std::array<bool, kNumParts>& visible) {
  ClassLabels c_g{};
  for (const PartModel& part : scene.parts)
    c_g[part.class_index] = visible[part.class_index] ? 1 : 0;
  c_g[kNoObjectIndex] = 0;
  return c_g;
}

Scene default_scene() {
  struct Box {
    const char* name;
    Vec3 lo, hi;
  };
  const Box boxes[kNumParts] = {
      {"dog house center", {-1.0, 5.2, 0.3}, {1.0, 6.8, 1.8}},
      {"dog house", {-2.0, 4.5, 0.0}, {2.0, 7.5, 2.2}},
      {"house", {-2.6, 7.5, 0.0}, {2.6, 12.5, 3.0}},
      {"super structure", {-3.0, 4.5, 0.0}, {3.0, 16.0, 4.5}},
      {"whole ship", {-3.5, -6.0, -2.5}, {3.5, 27.0, 5.5}},
      {"ship stern", {-3.5, -6.0, -2.5}, {3.5, 4.0, 1.5}},
  };
  Scene scene;
  for (int i = 0; i < kNumParts; ++i) {
    PartModel part;
    part.class_index = i;
    part.name = boxes[i].name;
    part.keypoints3d = keypoints_from_box(boxes[i].lo, boxes[i].hi);
    scene.parts.push_back(std::move(part));
  }
  return scene;
}

namespace {

Vec3 vec3_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3)
    throw std::invalid_argument("scene: expected a 3-element array");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

Scene parse_scene(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("scene: bad JSON: ") + e.what());
  }
  if (!j.contains("parts") || !j["parts"].is_array())
    throw std::invalid_argument("scene: missing \"parts\" array");
  Scene scene;
  for (const auto& jp : j["parts"]) {
    PartModel part;
    part.name = jp.at("name").get<std::string>();
    part.class_index = jp.at("class_index").get<int>();
    if (part.class_index < 0 || part.class_index >= kNumParts)
      throw std::invalid_argument("scene: class_index out of range");
    if (jp.contains("box")) {
      part.keypoints3d = keypoints_from_box(vec3_from_json(jp["box"].at("min")),
                                            vec3_from_json(jp["box"].at("max")));
    } else if (jp.contains("corners")) {
      const auto& jc = jp["corners"];
      if (!jc.is_array() || jc.size() != 8)
        throw std::invalid_argument("scene: \"corners\" needs 8 points");
      std::array<Vec3, 8> corners;
      for (int i = 0; i < 8; ++i) corners[i] = vec3_from_json(jc[i]);
      part.keypoints3d = keypoints_from_corners(corners);
    } else {
      throw std::invalid_argument("scene: part needs \"box\" or \"corners\"");
    }
    scene.parts.push_back(std::move(part));
  }
  if (scene.parts.size() != kNumParts)
    throw std::invalid_argument("scene: expected exactly 6 parts");
  std::array<bool, kNumParts> seen{};
  for (const auto& p : scene.parts) {
    if (seen[p.class_index])
      throw std::invalid_argument("scene: duplicate class_index");
    seen[p.class_index] = true;
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scene(ss.str());
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["parts"] = nlohmann::json::array();
  for (const PartModel& part : scene.parts) {
    nlohmann::json jp;
    jp["name"] = part.name;
    jp["class_index"] = part.class_index;
    // Emit explicit corners so arbitrary (possibly rotated) parts
    // round-trip bit-exactly.
    nlohmann::json corners = nlohmann::json::array();
    for (int i = 0; i < 8; ++i)
      corners.push_back({part.keypoints3d(i, 0), part.keypoints3d(i, 1),
                         part.keypoints3d(i, 2)});
    jp["corners"] = corners;
    j["parts"].push_back(jp);
  }
  return j.dump(2);
}

}  // namespace posefuse
