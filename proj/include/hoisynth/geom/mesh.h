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

#ifndef HOISYNTH_GEOM_MESH_H_
#define HOISYNTH_GEOM_MESH_H_

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "hoisynth/geom/transform.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::geom {

// Triangle surface. Vertices in meters. A mesh with no faces is a valid
// vertex cloud for nearest-point queries; SDF construction additionally
// requires a watertight surface.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  bool watertight = false;

  Aabb bounds() const;
};

// Validates face indices, rejects zero-area triangles, and records the
// watertightness flag. Throws std::runtime_error on invalid input.
void finalize_mesh(TriMesh& mesh);

// Every directed edge appears exactly once and is matched by its reverse.
bool is_watertight(const TriMesh& mesh);

// Wavefront OBJ subset: `v x y z` and triangulated `f a b c` records
// (slash-qualified indices accepted, only the vertex index is used).
TriMesh load_obj(const std::string& path);
void save_obj(const TriMesh& mesh, const std::string& path);

// Posed mesh vertex nearest to `point` in Euclidean distance, with
// deterministic lowest-index tie-break. Returns {vertex index, distance}.
std::pair<int, double> nearest_on_mesh(const TriMesh& mesh,
                                       const RigidTransform& pose,
                                       const Vec3& point);

// Exact closest point on a triangle (used by the SDF builder).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c);

}  // namespace hoisynth::geom

#endif  // HOISYNTH_GEOM_MESH_H_
