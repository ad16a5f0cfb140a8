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

#ifndef HOISYNTH_BODY_BODY_H_
#define HOISYNTH_BODY_BODY_H_

#include <string>
#include <utility>
#include <vector>

#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/sdf.h"
#include "hoisynth/geom/transform.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::body {

// Articulated skinned body: T-pose template surface, joint tree, sparse
// linear-blend skin weights, and a per-vertex part segmentation.
struct BodyRig {
  geom::TriMesh template_mesh;
  std::vector<geom::Vec3> joints;
  std::vector<int> parents;  // parents[0] == -1 (root)
  // Per vertex: (joint index, weight) pairs; weights sum to 1 per row.
  std::vector<std::vector<std::pair<int, double>>> skin_weights;
  std::vector<int> part_labels;         // per vertex, index into part_names
  std::vector<std::string> part_names;  // P >= 2

  int joint_count() const { return static_cast<int>(joints.size()); }
  int vertex_count() const {
    return static_cast<int>(template_mesh.vertices.size());
  }
};

// Pose parameters: root translation plus per-joint axis-angle rotations
// (joint 0 is the global orientation).
struct BodyPose {
  geom::Vec3 root_translation = geom::Vec3::Zero();
  std::vector<geom::Vec3> joint_rotations;
};

struct PoseSequence {
  std::vector<BodyPose> frames;
  double frame_rate = 30.0;  // Hz
};

// Structural validation of every rig invariant (tree rooted at 0, weight
// rows sum to 1, labels in range, P >= 2). Throws on violation.
void validate_rig(const BodyRig& rig);

// World transform of every joint (forward kinematics).
std::vector<geom::RigidTransform> joint_world_transforms(const BodyRig& rig,
                                                         const BodyPose& pose);

// Per-joint skinning transform T_k mapping template space to world space
// (root translation not yet applied): posed vertex = root_t + sum_k w_k T_k(v).
std::vector<geom::RigidTransform> skin_transforms(const BodyRig& rig,
                                                  const BodyPose& pose);

// Linear-blend skinning. Throws on joint-count mismatch.
std::vector<geom::Vec3> skin(const BodyRig& rig, const BodyPose& pose);

// Indices of all vertices labeled with `part`. Unknown names raise an
// error listing the valid ones.
std::vector<int> part_vertices(const BodyRig& rig, const std::string& part);

// Applies the global rigid motion g to a pose: the skinned surface moves
// by exactly g (rotation folded into the root joint).
BodyPose transform_pose_root(const BodyRig& rig, const BodyPose& pose,
                             const geom::RigidTransform& g);

// Signed-distance grid of the skinned body; identical to running the
// grid builder on the posed surface directly.
geom::SdfGrid body_sdf(const BodyRig& rig, const BodyPose& pose, double cell,
                       double padding);

// Wraps every joint rotation magnitude into [0, 2*pi).
void canonicalize_pose(BodyPose& pose);

// Rig file: JSON document with template_obj (path relative to the rig
// file), joints, parents, weights (sparse [vertex, joint, w] triplets),
// part_labels, part_names.
BodyRig load_rig(const std::string& path);
void save_rig(const BodyRig& rig, const std::string& path,
              const std::string& template_obj_name);

// Pose sequences: JSON lines, one frame per line
// {"t": seconds, "root_t": [3], "joint_r": [[3], ...]}.
PoseSequence load_pose_sequence(const std::string& path);
void save_pose_sequence(const PoseSequence& seq, const std::string& path);

}  // namespace hoisynth::body

#endif  // HOISYNTH_BODY_BODY_H_
