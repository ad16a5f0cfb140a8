// Copyright 2026 The hoisynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hoisynth/body/body.h"

namespace hoisynth::body {

using geom::Vec3;
using nlohmann::json;

namespace {

Vec3 vec3_from_json(const json& arr) {
  if (!arr.is_array() || arr.size() != 3) {
    throw std::runtime_error("expected a 3-element array");
  }
  return Vec3(arr[0].get<double>(), arr[1].get<double>(), arr[2].get<double>());
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

}  // namespace

BodyRig load_rig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rig file: " + path);
  json doc = json::parse(in);

  BodyRig rig;
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  const std::string obj_name = doc.at("template_obj").get<std::string>();
  rig.template_mesh = geom::load_obj((base / obj_name).string());

  for (const json& j : doc.at("joints")) rig.joints.push_back(vec3_from_json(j));
  for (const json& p : doc.at("parents")) rig.parents.push_back(p.get<int>());
  rig.skin_weights.resize(rig.template_mesh.vertices.size());
  for (const json& triplet : doc.at("weights")) {
    if (!triplet.is_array() || triplet.size() != 3) {
      throw std::runtime_error("rig: weight entry is not a [vertex, joint, w] triplet");
    }
    const int vertex = triplet[0].get<int>();
    if (vertex < 0 || vertex >= rig.vertex_count()) {
      throw std::runtime_error("rig: weight vertex index out of range");
    }
    rig.skin_weights[vertex].emplace_back(triplet[1].get<int>(),
                                          triplet[2].get<double>());
  }
  for (const json& l : doc.at("part_labels")) rig.part_labels.push_back(l.get<int>());
  for (const json& n : doc.at("part_names")) rig.part_names.push_back(n.get<std::string>());

  validate_rig(rig);
  return rig;
}

void save_rig(const BodyRig& rig, const std::string& path,
              const std::string& template_obj_name) {
  validate_rig(rig);
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  geom::save_obj(rig.template_mesh, (base / template_obj_name).string());

  json doc;
  doc["template_obj"] = template_obj_name;
  doc["joints"] = json::array();
  for (const Vec3& j : rig.joints) doc["joints"].push_back(vec3_to_json(j));
  doc["parents"] = rig.parents;
  doc["weights"] = json::array();
  for (int i = 0; i < rig.vertex_count(); ++i) {
    for (const auto& [joint, w] : rig.skin_weights[i]) {
      doc["weights"].push_back(json::array({i, joint, w}));
    }
  }
  doc["part_labels"] = rig.part_labels;
  doc["part_names"] = rig.part_names;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rig file: " + path);
  out << doc.dump(1) << '\n';
}

PoseSequence load_pose_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open pose sequence: " + path);
  PoseSequence seq;
  std::vector<double> times;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json frame = json::parse(line);
    BodyPose pose;
    pose.root_translation = vec3_from_json(frame.at("root_t"));
    for (const json& r : frame.at("joint_r")) {
      pose.joint_rotations.push_back(vec3_from_json(r));
    }
    canonicalize_pose(pose);
    seq.frames.push_back(std::move(pose));
    times.push_back(frame.at("t").get<double>());
  }
  if (seq.frames.empty()) {
    throw std::runtime_error("pose sequence is empty: " + path);
  }
  if (times.size() >= 2) {
    const double dt = times[1] - times[0];
    if (dt <= 0.0) throw std::runtime_error("pose sequence: non-increasing timestamps");
    for (std::size_t i = 2; i < times.size(); ++i) {
      if (std::abs((times[i] - times[i - 1]) - dt) > 1e-6) {
        throw std::runtime_error("pose sequence: frame rate not constant");
      }
    }
    seq.frame_rate = 1.0 / dt;
  }
  return seq;
}

void save_pose_sequence(const PoseSequence& seq, const std::string& path) {
  if (seq.frames.empty()) throw std::runtime_error("pose sequence is empty");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write pose sequence: " + path);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    const BodyPose& pose = seq.frames[i];
    json frame;
    frame["t"] = static_cast<double>(i) / seq.frame_rate;
    frame["root_t"] = vec3_to_json(pose.root_translation);
    frame["joint_r"] = json::array();
    for (const Vec3& r : pose.joint_rotations) {
      frame["joint_r"].push_back(vec3_to_json(r));
    }
    out << frame.dump() << '\n';
  }
}

}  // namespace hoisynth::body
