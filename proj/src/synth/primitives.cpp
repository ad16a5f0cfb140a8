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

#include "hoisynth/synth/primitives.h"

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hoisynth::synth {

using geom::TriMesh;
using geom::Vec3;

TriMesh make_box_mesh(const Vec3& center, const Vec3& half_extents) {
  if ((half_extents.array() <= 0.0).any()) {
    throw std::invalid_argument("make_box_mesh: half_extents must be positive");
  }
  TriMesh mesh;
  mesh.vertices.reserve(8);
  for (int iz = 0; iz < 2; ++iz) {
    for (int iy = 0; iy < 2; ++iy) {
      for (int ix = 0; ix < 2; ++ix) {
        mesh.vertices.push_back(center + Vec3((ix ? 1 : -1) * half_extents.x(),
                                              (iy ? 1 : -1) * half_extents.y(),
                                              (iz ? 1 : -1) * half_extents.z()));
      }
    }
  }
  // Vertex idx = ix + 2*iy + 4*iz; faces wound outward.
  mesh.faces = {{1, 3, 7}, {1, 7, 5}, {0, 4, 6}, {0, 6, 2},
                {2, 6, 7}, {2, 7, 3}, {0, 1, 5}, {0, 5, 4},
                {4, 5, 7}, {4, 7, 6}, {0, 2, 3}, {0, 3, 1}};
  geom::finalize_mesh(mesh);
  return mesh;
}

namespace {

// Lattice nodes live on the box surface; interior nodes are skipped so the
// vertex list stays welded across the six faces.
struct LatticeIndexer {
  std::array<int, 3> n;
  std::vector<int> node_to_vertex;

  LatticeIndexer(const std::array<int, 3>& divisions, TriMesh& mesh,
                 const Vec3& center, const Vec3& half_extents)
      : n(divisions) {
    node_to_vertex.assign(static_cast<std::size_t>(n[0] + 1) * (n[1] + 1) *
                              (n[2] + 1),
                          -1);
    for (int iz = 0; iz <= n[2]; ++iz) {
      for (int iy = 0; iy <= n[1]; ++iy) {
        for (int ix = 0; ix <= n[0]; ++ix) {
          const bool boundary = ix == 0 || ix == n[0] || iy == 0 ||
                                iy == n[1] || iz == 0 || iz == n[2];
          if (!boundary) continue;
          node_to_vertex[flat(ix, iy, iz)] =
              static_cast<int>(mesh.vertices.size());
          mesh.vertices.push_back(
              center + Vec3(half_extents.x() * (2.0 * ix / n[0] - 1.0),
                            half_extents.y() * (2.0 * iy / n[1] - 1.0),
                            half_extents.z() * (2.0 * iz / n[2] - 1.0)));
        }
      }
    }
  }

  std::size_t flat(int ix, int iy, int iz) const {
    return static_cast<std::size_t>(ix) +
           static_cast<std::size_t>(n[0] + 1) *
               (static_cast<std::size_t>(iy) +
                static_cast<std::size_t>(n[1] + 1) * iz);
  }
  int vertex(const std::array<int, 3>& node) const {
    return node_to_vertex[flat(node[0], node[1], node[2])];
  }
};

}  // namespace

TriMesh make_subdivided_box_mesh(const Vec3& center, const Vec3& half_extents,
                                 const std::array<int, 3>& divisions) {
  if ((half_extents.array() <= 0.0).any()) {
    throw std::invalid_argument(
        "make_subdivided_box_mesh: half_extents must be positive");
  }
  for (int d : divisions) {
    if (d < 1) {
      throw std::invalid_argument(
          "make_subdivided_box_mesh: divisions must be >= 1");
    }
  }
  TriMesh mesh;
  LatticeIndexer lattice(divisions, mesh, center, half_extents);

  // One entry per face: fixed axis, fixed lattice value, and the two
  // in-face axes (u, v) ordered so u x v points outward.
  struct FaceSpec {
    int fixed_axis, fixed_value, u_axis, v_axis;
  };
  const FaceSpec specs[6] = {
      {0, divisions[0], 1, 2},  // +x
      {0, 0, 2, 1},             // -x
      {1, divisions[1], 2, 0},  // +y
      {1, 0, 0, 2},             // -y
      {2, divisions[2], 0, 1},  // +z
      {2, 0, 1, 0},             // -z
  };
  for (const FaceSpec& s : specs) {
    for (int v = 0; v < divisions[s.v_axis]; ++v) {
      for (int u = 0; u < divisions[s.u_axis]; ++u) {
        auto node = [&](int du, int dv) {
          std::array<int, 3> c{};
          c[s.fixed_axis] = s.fixed_value;
          c[s.u_axis] = u + du;
          c[s.v_axis] = v + dv;
          return lattice.vertex(c);
        };
        const int a = node(0, 0), b = node(1, 0), c = node(1, 1),
                  d = node(0, 1);
        mesh.faces.push_back({a, b, c});
        mesh.faces.push_back({a, c, d});
      }
    }
  }
  geom::finalize_mesh(mesh);
  return mesh;
}

TriMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
  if (radius <= 0.0) {
    throw std::invalid_argument("make_icosphere: radius must be positive");
  }
  if (subdivisions < 0 || subdivisions > 7) {
    throw std::invalid_argument("make_icosphere: subdivisions out of range");
  }
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> verts = {
      {-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
      {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
      {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& v : verts) v.normalize();
  std::vector<std::array<int, 3>> faces = {
      {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
      {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
      {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
      {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

  for (int level = 0; level < subdivisions; ++level) {
    std::map<std::pair<int, int>, int> midpoint;
    auto mid = [&](int a, int b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      const int id = static_cast<int>(verts.size());
      verts.push_back((verts[a] + verts[b]).normalized());
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(faces.size() * 4);
    for (const auto& f : faces) {
      const int ab = mid(f[0], f[1]);
      const int bc = mid(f[1], f[2]);
      const int ca = mid(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }

  TriMesh mesh;
  mesh.vertices.reserve(verts.size());
  for (const Vec3& v : verts) mesh.vertices.push_back(center + radius * v);
  mesh.faces = std::move(faces);
  geom::finalize_mesh(mesh);
  return mesh;
}

}  // namespace hoisynth::synth
