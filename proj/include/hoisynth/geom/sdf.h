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

#ifndef HOISYNTH_GEOM_SDF_H_
#define HOISYNTH_GEOM_SDF_H_

#include <array>
#include <string>
#include <vector>

#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::geom {

// Dense signed-distance grid, negative inside. Values are stored at grid
// nodes (float32), x-fastest; queries interpolate trilinearly. Immutable
// after construction and safe to query from many threads.
struct SdfGrid {
  Vec3 origin = Vec3::Zero();
  double cell = 0.0;
  std::array<int, 3> dims{0, 0, 0};
  std::vector<float> values;

  int index(int i, int j, int k) const {
    return i + dims[0] * (j + dims[1] * k);
  }
  float at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 node_position(int i, int j, int k) const {
    return origin + cell * Vec3(i, j, k);
  }
  Vec3 max_corner() const {
    return origin + cell * Vec3(dims[0] - 1, dims[1] - 1, dims[2] - 1);
  }
};

// Signed-distance grid of a watertight mesh over its AABB expanded by
// `padding` on all sides. Exact point-triangle distances are seeded in a
// narrow band and propagated by closest-triangle sweeps; the sign comes
// from per-column intersection parity.
// Throws "sign undefined" for non-watertight input.
SdfGrid build_sdf(const TriMesh& mesh, double cell_size, double padding);

// Trilinear signed distance. Points outside the grid clamp to the
// boundary value plus the Euclidean excess to the clamped point.
double query_sdf(const SdfGrid& grid, const Vec3& point);

// Gradient of query_sdf (piecewise-trilinear; exterior excess included).
Vec3 query_sdf_gradient(const SdfGrid& grid, const Vec3& point);

// Binary blob: header (origin, cell, dims) then little-endian float32
// values in x-fastest order.
void save_sdf(const SdfGrid& grid, const std::string& path);
SdfGrid load_sdf(const std::string& path);

}  // namespace hoisynth::geom

#endif  // HOISYNTH_GEOM_SDF_H_
