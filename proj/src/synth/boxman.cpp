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

#include "hoisynth/synth/boxman.h"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "hoisynth/synth/primitives.h"

namespace hoisynth::synth {

using geom::Vec3;

namespace {

struct JointSpec {
  const char* name;
  int parent;
  Vec3 position;
};

struct PartBox {
  Vec3 center;
  Vec3 half;
  bool subdivided = false;  // 12-vertex lattice (hands)
};

Vec3 mirror_x(const Vec3& v) { return Vec3(-v.x(), v.y(), v.z()); }

}  // namespace

body::BodyRig make_boxman_rig() {
  // Left-side and center joints; right side mirrors across the yz-plane.
  const std::vector<JointSpec> joints = {
      {"pelvis", -1, {0.00, 0.95, 0.00}},
      {"left_hip", 0, {0.10, 0.90, 0.00}},
      {"right_hip", 0, mirror_x({0.10, 0.90, 0.00})},
      {"spine1", 0, {0.00, 1.05, 0.00}},
      {"left_knee", 1, {0.10, 0.50, 0.00}},
      {"right_knee", 2, mirror_x({0.10, 0.50, 0.00})},
      {"spine2", 3, {0.00, 1.15, 0.00}},
      {"left_ankle", 4, {0.10, 0.10, 0.00}},
      {"right_ankle", 5, mirror_x({0.10, 0.10, 0.00})},
      {"spine3", 6, {0.00, 1.25, 0.00}},
      {"left_foot", 7, {0.10, 0.05, 0.08}},
      {"right_foot", 8, mirror_x({0.10, 0.05, 0.08})},
      {"neck", 9, {0.00, 1.40, 0.00}},
      {"left_collar", 9, {0.08, 1.35, 0.00}},
      {"right_collar", 9, mirror_x({0.08, 1.35, 0.00})},
      {"head", 12, {0.00, 1.55, 0.00}},
      {"left_shoulder", 13, {0.18, 1.35, 0.00}},
      {"right_shoulder", 14, mirror_x({0.18, 1.35, 0.00})},
      {"left_elbow", 16, {0.42, 1.35, 0.00}},
      {"right_elbow", 17, mirror_x({0.42, 1.35, 0.00})},
      {"left_wrist", 18, {0.64, 1.35, 0.00}},
      {"right_wrist", 19, mirror_x({0.64, 1.35, 0.00})},
      {"left_hand", 20, {0.72, 1.35, 0.00}},
      {"right_hand", 21, mirror_x({0.72, 1.35, 0.00})},
  };

  // One closed box per part, sized to leave >= 1 cm clearance between
  // neighbors in the T-pose so the union stays a valid solid.
  auto part_box = [&](int joint) -> PartBox {
    const std::string name = joints[joint].name;
    const bool right = name.rfind("right_", 0) == 0;
    const std::string side = right ? "left_" + name.substr(6) : name;
    PartBox box;
    if (side == "pelvis") box = {{0.00, 0.950, 0.00}, {0.130, 0.050, 0.080}};
    else if (side == "left_hip") box = {{0.10, 0.700, 0.00}, {0.055, 0.180, 0.055}};
    else if (side == "left_knee") box = {{0.10, 0.300, 0.00}, {0.050, 0.180, 0.050}};
    else if (side == "left_ankle") box = {{0.10, 0.075, 0.00}, {0.045, 0.020, 0.045}};
    else if (side == "left_foot") box = {{0.10, 0.025, 0.06}, {0.045, 0.020, 0.090}};
    else if (side == "spine1") box = {{0.00, 1.050, 0.00}, {0.120, 0.040, 0.075}};
    else if (side == "spine2") box = {{0.00, 1.145, 0.00}, {0.125, 0.045, 0.075}};
    else if (side == "spine3") box = {{0.00, 1.265, 0.00}, {0.140, 0.065, 0.080}};
    else if (side == "neck") box = {{0.00, 1.405, 0.00}, {0.040, 0.040, 0.040}};
    else if (side == "left_collar") box = {{0.10, 1.355, 0.00}, {0.050, 0.012, 0.050}};
    else if (side == "head") box = {{0.00, 1.590, 0.00}, {0.080, 0.115, 0.080}};
    else if (side == "left_shoulder") box = {{0.30, 1.350, 0.00}, {0.100, 0.045, 0.045}};
    else if (side == "left_elbow") box = {{0.53, 1.350, 0.00}, {0.090, 0.040, 0.040}};
    else if (side == "left_wrist") box = {{0.655, 1.350, 0.00}, {0.015, 0.035, 0.035}};
    else if (side == "left_hand") box = {{0.73, 1.350, 0.00}, {0.050, 0.035, 0.035}, true};
    else throw std::runtime_error("boxman: no box for part " + name);
    if (right) box.center = mirror_x(box.center);
    return box;
  };

  body::BodyRig rig;
  for (const JointSpec& j : joints) {
    rig.joints.push_back(j.position);
    rig.parents.push_back(j.parent);
    rig.part_names.emplace_back(j.name);
  }

  for (int part = 0; part < static_cast<int>(joints.size()); ++part) {
    const PartBox box = part_box(part);
    const geom::TriMesh piece =
        box.subdivided
            ? make_subdivided_box_mesh(box.center, box.half, {2, 1, 1})
            : make_box_mesh(box.center, box.half);
    const int offset = rig.vertex_count();
    for (const Vec3& v : piece.vertices) {
      rig.template_mesh.vertices.push_back(v);
      rig.skin_weights.push_back({{part, 1.0}});
      rig.part_labels.push_back(part);
    }
    for (const auto& f : piece.faces) {
      rig.template_mesh.faces.push_back(
          {f[0] + offset, f[1] + offset, f[2] + offset});
    }
  }
  geom::finalize_mesh(rig.template_mesh);
  body::validate_rig(rig);
  return rig;
}

}  // namespace hoisynth::synth
