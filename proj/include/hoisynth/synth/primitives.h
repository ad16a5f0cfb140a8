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

#ifndef HOISYNTH_SYNTH_PRIMITIVES_H_
#define HOISYNTH_SYNTH_PRIMITIVES_H_

#include <array>

#include "hoisynth/geom/mesh.h"
#include "hoisynth/geom/types.h"

namespace hoisynth::synth {

// Watertight axis-aligned box: 8 vertices, 12 outward-facing triangles.
geom::TriMesh make_box_mesh(const geom::Vec3& center,
                            const geom::Vec3& half_extents);

// Watertight box whose surface is a welded lattice with `divisions[a]`
// cells along axis a. divisions {2,1,1} yields exactly 12 vertices.
geom::TriMesh make_subdivided_box_mesh(const geom::Vec3& center,
                                       const geom::Vec3& half_extents,
                                       const std::array<int, 3>& divisions);

// Watertight icosphere: icosahedron refined `subdivisions` times, vertices
// projected onto the sphere.
geom::TriMesh make_icosphere(const geom::Vec3& center, double radius,
                             int subdivisions);

}  // namespace hoisynth::synth

#endif  // HOISYNTH_SYNTH_PRIMITIVES_H_
