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

#ifndef HOISYNTH_GEOM_TYPES_H_
#define HOISYNTH_GEOM_TYPES_H_

#include <limits>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace hoisynth::geom {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Ordered list of 3D points. Order is significant: registration pairs
// points by index.
using PointSet = std::vector<Vec3>;

struct Aabb {
  Vec3 min{Vec3::Constant(std::numeric_limits<double>::infinity())};
  Vec3 max{Vec3::Constant(-std::numeric_limits<double>::infinity())};

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 extent() const { return max - min; }
};

}  // namespace hoisynth::geom

#endif  // HOISYNTH_GEOM_TYPES_H_
