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

#ifndef HOISYNTH_WORLDMODEL_CONTROL_H_
#define HOISYNTH_WORLDMODEL_CONTROL_H_

#include <vector>

#include "hoisynth/body/body.h"
#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/sdf.h"
#include "hoisynth/geom/transform.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::worldmodel {

// Sparse human control vertices with their trajectories and per-vertex
// features. N may be zero (a contact-free segment).
struct ControlSet {
  std::vector<int> vertex_ids;                          // N
  std::vector<std::vector<geom::Vec3>> trajectories;    // N x (H+F), world
  std::vector<geom::Vec3> tpose;                        // N
  std::vector<std::vector<double>> surface_dist;        // N x (H+F), >= 0
  std::vector<std::vector<geom::Vec3>> rel_velocity;    // N x (H+F)

  int count() const { return static_cast<int>(vertex_ids.size()); }
  int frame_count() const {
    return trajectories.empty() ? 0
                                : static_cast<int>(trajectories[0].size());
  }
};

// Greedy farthest-point selection of body vertices staying within
// `delta1` of the object surface at every history frame, keeping picks
// pairwise at least `delta2` apart at every history frame. Deterministic:
// the first pick is the lowest candidate index, later picks maximize the
// worst-case separation with lowest-index tie-breaks. The empty result is
// valid and signals a contact-free segment.
std::vector<int> sample_control_vertices(
    const std::vector<std::vector<geom::Vec3>>& body_frames,
    const geom::SdfGrid& object_sdf,
    const std::vector<geom::RigidTransform>& object_poses, double delta1,
    double delta2);

// Fills per-vertex features: T-pose coordinates, distance to the nearest
// object vertex per frame, and the velocity of the vertex relative to its
// nearest object vertex (finite differences in the object's local frame,
// so rigid co-motion cancels exactly; frame 0 copies frame 1).
ControlSet control_features(
    const body::BodyRig& rig, const std::vector<int>& vertex_ids,
    const std::vector<std::vector<geom::Vec3>>& trajectories,
    const geom::TriMesh& object_mesh,
    const std::vector<geom::RigidTransform>& object_poses);

}  // namespace hoisynth::worldmodel

#endif  // HOISYNTH_WORLDMODEL_CONTROL_H_
