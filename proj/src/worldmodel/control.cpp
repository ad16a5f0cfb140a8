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

#include "hoisynth/worldmodel/control.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hoisynth::worldmodel {

using geom::RigidTransform;
using geom::Vec3;

std::vector<int> sample_control_vertices(
    const std::vector<std::vector<Vec3>>& body_frames,
    const geom::SdfGrid& object_sdf,
    const std::vector<RigidTransform>& object_poses, double delta1,
    double delta2) {
  if (delta1 <= 0.0 || delta2 <= 0.0) {
    throw std::invalid_argument("sample_control_vertices: deltas must be > 0");
  }
  if (body_frames.empty()) return {};
  if (body_frames.size() != object_poses.size()) {
    throw std::invalid_argument(
        "sample_control_vertices: frame count mismatch between body and object");
  }
  const int frames = static_cast<int>(body_frames.size());
  const int verts = static_cast<int>(body_frames[0].size());

  // Candidates stay within the surface band at every history frame.
  std::vector<int> candidates;
  for (int j = 0; j < verts; ++j) {
    bool in_band = true;
    for (int i = 0; i < frames && in_band; ++i) {
      const Vec3 local = object_poses[i].apply_inverse(body_frames[i][j]);
      in_band = std::abs(geom::query_sdf(object_sdf, local)) <= delta1;
    }
    if (in_band) candidates.push_back(j);
  }
  if (candidates.empty()) return {};

  // Separation between two vertices is their closest approach over the
  // history; the pairwise constraint must hold at every frame.
  auto separation = [&](int a, int b) {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < frames; ++i) {
      worst = std::min(worst, (body_frames[i][a] - body_frames[i][b]).norm());
    }
    return worst;
  };

  std::vector<int> selected = {candidates.front()};
  std::vector<bool> taken(candidates.size(), false);
  taken[0] = true;
  while (true) {
    int best = -1;
    double best_score = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (taken[c]) continue;
      double score = std::numeric_limits<double>::infinity();
      for (int s : selected) {
        score = std::min(score, separation(candidates[c], s));
        if (score < delta2) break;
      }
      if (score < delta2) continue;  // inadmissible
      if (score > best_score) {
        best_score = score;
        best = static_cast<int>(c);
      }
    }
    if (best < 0) break;
    taken[best] = true;
    selected.push_back(candidates[best]);
  }
  return selected;
}

ControlSet control_features(
    const body::BodyRig& rig, const std::vector<int>& vertex_ids,
    const std::vector<std::vector<Vec3>>& trajectories,
    const geom::TriMesh& object_mesh,
    const std::vector<RigidTransform>& object_poses) {
  if (vertex_ids.size() != trajectories.size()) {
    throw std::invalid_argument("control_features: ids/trajectories mismatch");
  }
  ControlSet set;
  set.vertex_ids = vertex_ids;
  set.trajectories = trajectories;
  const int n = set.count();
  if (n == 0) return set;

  const int frames = static_cast<int>(trajectories[0].size());
  for (const auto& traj : trajectories) {
    if (static_cast<int>(traj.size()) != frames) {
      throw std::invalid_argument("control_features: ragged trajectories");
    }
  }
  if (static_cast<int>(object_poses.size()) != frames) {
    throw std::invalid_argument(
        "control_features: object pose count must equal trajectory length");
  }

  set.tpose.reserve(n);
  set.surface_dist.assign(n, std::vector<double>(frames, 0.0));
  set.rel_velocity.assign(n, std::vector<Vec3>(frames, Vec3::Zero()));
  for (int j = 0; j < n; ++j) {
    const int id = vertex_ids[j];
    if (id < 0 || id >= rig.vertex_count()) {
      throw std::invalid_argument("control_features: vertex id out of range");
    }
    set.tpose.push_back(rig.template_mesh.vertices[id]);

    // Offset to the nearest object vertex, tracked in the object's local
    // frame so rigid co-motion cancels exactly.
    std::vector<Vec3> offset(frames);
    for (int i = 0; i < frames; ++i) {
      const auto [vertex, dist] =
          geom::nearest_on_mesh(object_mesh, object_poses[i],
                                trajectories[j][i]);
      set.surface_dist[j][i] = dist;
      offset[i] = object_poses[i].apply_inverse(trajectories[j][i]) -
                  object_mesh.vertices[vertex];
    }
    for (int i = 1; i < frames; ++i) {
      set.rel_velocity[j][i] = offset[i] - offset[i - 1];
    }
    if (frames > 1) set.rel_velocity[j][0] = set.rel_velocity[j][1];
  }
  return set;
}

}  // namespace hoisynth::worldmodel
