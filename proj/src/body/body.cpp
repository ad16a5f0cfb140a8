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

#include "hoisynth/body/body.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace hoisynth::body {

using geom::Mat3;
using geom::RigidTransform;
using geom::Vec3;

void validate_rig(const BodyRig& rig) {
  const int j = rig.joint_count();
  const int v = rig.vertex_count();
  if (j < 1) throw std::runtime_error("rig: no joints");
  if (static_cast<int>(rig.parents.size()) != j) {
    throw std::runtime_error("rig: parents size mismatch");
  }
  if (rig.parents[0] != -1) {
    throw std::runtime_error("rig: joint 0 must be the root (parent -1)");
  }
  for (int k = 1; k < j; ++k) {
    // Requiring parent < child makes the parent array acyclic by
    // construction and lets forward kinematics run in one pass.
    if (rig.parents[k] < 0 || rig.parents[k] >= k) {
      throw std::runtime_error("rig: parents must form a tree (parent < child)");
    }
  }
  if (static_cast<int>(rig.skin_weights.size()) != v) {
    throw std::runtime_error("rig: skin_weights size mismatch");
  }
  for (int i = 0; i < v; ++i) {
    double sum = 0.0;
    if (rig.skin_weights[i].empty()) {
      throw std::runtime_error("rig: vertex with no skin weights");
    }
    for (const auto& [joint, w] : rig.skin_weights[i]) {
      if (joint < 0 || joint >= j) {
        throw std::runtime_error("rig: skin weight joint out of range");
      }
      if (w < 0.0) throw std::runtime_error("rig: negative skin weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw std::runtime_error("rig: skin weight row does not sum to 1");
    }
  }
  if (rig.part_names.size() < 2) {
    throw std::runtime_error("rig: need at least 2 part names");
  }
  if (static_cast<int>(rig.part_labels.size()) != v) {
    throw std::runtime_error("rig: part_labels size mismatch");
  }
  for (int label : rig.part_labels) {
    if (label < 0 || label >= static_cast<int>(rig.part_names.size())) {
      throw std::runtime_error("rig: part label out of range");
    }
  }
}

std::vector<RigidTransform> joint_world_transforms(const BodyRig& rig,
                                                   const BodyPose& pose) {
  const int j = rig.joint_count();
  if (static_cast<int>(pose.joint_rotations.size()) != j) {
    throw std::runtime_error("pose: joint count mismatch with rig");
  }
  std::vector<RigidTransform> world(j);
  for (int k = 0; k < j; ++k) {
    const Mat3 r = geom::axis_angle_to_matrix(pose.joint_rotations[k]);
    if (k == 0) {
      world[0] = RigidTransform{r, rig.joints[0]};
    } else {
      const int p = rig.parents[k];
      const RigidTransform local{r, rig.joints[k] - rig.joints[p]};
      world[k] = world[p].compose(local);
    }
  }
  return world;
}

std::vector<RigidTransform> skin_transforms(const BodyRig& rig,
                                            const BodyPose& pose) {
  std::vector<RigidTransform> world = joint_world_transforms(rig, pose);
  // Composing with the inverse rest-pose transforms (built by the same
  // recursion) cancels the chain's rounding bit-for-bit at identity, so
  // the identity pose reproduces the template exactly.
  BodyPose rest;
  rest.joint_rotations.assign(rig.joint_count(), Vec3::Zero());
  const std::vector<RigidTransform> rest_world =
      joint_world_transforms(rig, rest);
  for (int k = 0; k < rig.joint_count(); ++k) {
    world[k] = world[k].compose(rest_world[k].inverse());
  }
  return world;
}

std::vector<Vec3> skin(const BodyRig& rig, const BodyPose& pose) {
  const std::vector<RigidTransform> t = skin_transforms(rig, pose);
  std::vector<Vec3> out(rig.vertex_count());
  for (int i = 0; i < rig.vertex_count(); ++i) {
    Vec3 p = Vec3::Zero();
    for (const auto& [joint, w] : rig.skin_weights[i]) {
      p += w * t[joint].apply(rig.template_mesh.vertices[i]);
    }
    out[i] = p + pose.root_translation;
  }
  return out;
}

std::vector<int> part_vertices(const BodyRig& rig, const std::string& part) {
  int id = -1;
  for (int p = 0; p < static_cast<int>(rig.part_names.size()); ++p) {
    if (rig.part_names[p] == part) {
      id = p;
      break;
    }
  }
  if (id < 0) {
    std::ostringstream msg;
    msg << "unknown part name '" << part << "'; valid parts:";
    for (const std::string& name : rig.part_names) msg << ' ' << name;
    throw std::runtime_error(msg.str());
  }
  std::vector<int> indices;
  for (int i = 0; i < rig.vertex_count(); ++i) {
    if (rig.part_labels[i] == id) indices.push_back(i);
  }
  if (indices.empty()) {
    throw std::runtime_error("part '" + part + "' labels no vertices");
  }
  return indices;
}

BodyPose transform_pose_root(const BodyRig& rig, const BodyPose& pose,
                             const RigidTransform& g) {
  if (pose.joint_rotations.empty()) {
    throw std::runtime_error("pose: joint count mismatch with rig");
  }
  BodyPose out = pose;
  const Mat3 r0 = geom::axis_angle_to_matrix(pose.joint_rotations[0]);
  out.joint_rotations[0] = geom::matrix_to_axis_angle(g.rotation * r0);
  // The root rotation pivots about joint 0, so the pivot term keeps the
  // surface motion equal to g exactly.
  out.root_translation = g.translation + g.rotation * pose.root_translation -
                         (Mat3::Identity() - g.rotation) * rig.joints[0];
  return out;
}

geom::SdfGrid body_sdf(const BodyRig& rig, const BodyPose& pose, double cell,
                       double padding) {
  geom::TriMesh posed = rig.template_mesh;
  posed.vertices = skin(rig, pose);
  geom::finalize_mesh(posed);
  return geom::build_sdf(posed, cell, padding);
}

void canonicalize_pose(BodyPose& pose) {
  for (Vec3& aa : pose.joint_rotations) aa = geom::canonicalize_axis_angle(aa);
}

}  // namespace hoisynth::body
