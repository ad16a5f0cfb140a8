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

#include <array>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "hoisynth/worldmodel/dynamics.h"

namespace hoisynth::worldmodel {

using geom::RigidTransform;
using geom::Vec3;
using nlohmann::json;

namespace {

json pose_to_json(const RigidTransform& pose) {
  const auto r6 = geom::rotation_to_6d(pose.rotation);
  json j;
  j["t"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  j["r6"] = r6;
  return j;
}

RigidTransform pose_from_json(const json& j) {
  RigidTransform pose;
  const auto& t = j.at("t");
  pose.translation = Vec3(t[0].get<double>(), t[1].get<double>(),
                          t[2].get<double>());
  std::array<double, 6> r6;
  for (int k = 0; k < 6; ++k) r6[k] = j.at("r6")[k].get<double>();
  pose.rotation = geom::rotation_from_6d(r6);
  return pose;
}

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void save_corpus(const std::vector<TrainingSegment>& corpus,
                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const TrainingSegment& seg : corpus) {
    json record;
    record["frame_rate"] = seg.history.frame_rate;
    record["history"] = json::array();
    for (const auto& p : seg.history.frames) {
      record["history"].push_back(pose_to_json(p));
    }
    record["future"] = json::array();
    for (const auto& p : seg.future.frames) {
      record["future"].push_back(pose_to_json(p));
    }
    json controls;
    controls["ids"] = seg.controls.vertex_ids;
    controls["traj"] = json::array();
    controls["tpose"] = json::array();
    controls["sdist"] = seg.controls.surface_dist;
    controls["relvel"] = json::array();
    for (int j = 0; j < seg.controls.count(); ++j) {
      json traj = json::array(), relvel = json::array();
      for (const Vec3& v : seg.controls.trajectories[j]) {
        traj.push_back(vec3_to_json(v));
      }
      for (const Vec3& v : seg.controls.rel_velocity[j]) {
        relvel.push_back(vec3_to_json(v));
      }
      controls["traj"].push_back(std::move(traj));
      controls["tpose"].push_back(vec3_to_json(seg.controls.tpose[j]));
      controls["relvel"].push_back(std::move(relvel));
    }
    record["controls"] = std::move(controls);
    out << record.dump() << '\n';
  }
}

std::vector<TrainingSegment> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<TrainingSegment> corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json record = json::parse(line);
    TrainingSegment seg;
    seg.history.frame_rate = record.value("frame_rate", 30.0);
    seg.future.frame_rate = seg.history.frame_rate;
    for (const json& p : record.at("history")) {
      seg.history.frames.push_back(pose_from_json(p));
    }
    for (const json& p : record.at("future")) {
      seg.future.frames.push_back(pose_from_json(p));
    }
    const json& controls = record.at("controls");
    for (const json& id : controls.at("ids")) {
      seg.controls.vertex_ids.push_back(id.get<int>());
    }
    for (const json& traj : controls.at("traj")) {
      std::vector<Vec3> path_v;
      for (const json& v : traj) path_v.push_back(vec3_from_json(v));
      seg.controls.trajectories.push_back(std::move(path_v));
    }
    for (const json& v : controls.at("tpose")) {
      seg.controls.tpose.push_back(vec3_from_json(v));
    }
    for (const json& row : controls.at("sdist")) {
      seg.controls.surface_dist.push_back(row.get<std::vector<double>>());
    }
    for (const json& row : controls.at("relvel")) {
      std::vector<Vec3> vel;
      for (const json& v : row) vel.push_back(vec3_from_json(v));
      seg.controls.rel_velocity.push_back(std::move(vel));
    }
    if (seg.history.frames.empty() || seg.future.frames.empty()) {
      throw std::runtime_error("corpus record with empty horizons: " + path);
    }
    corpus.push_back(std::move(seg));
  }
  return corpus;
}

}  // namespace hoisynth::worldmodel
