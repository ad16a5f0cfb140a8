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

#ifndef HOISYNTH_GEOM_TRANSFORM_H_
#define HOISYNTH_GEOM_TRANSFORM_H_

#include <array>

#include "hoisynth/geom/types.h"

namespace hoisynth::geom {

// Rigid pose: rotation (orthonormal, det +1) plus translation in meters.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  Vec3 apply_inverse(const Vec3& p) const {
    return rotation.transpose() * (p - translation);
  }
  RigidTransform compose(const RigidTransform& rhs) const {
    // this ∘ rhs: applies rhs first.
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }
  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  // R·Rᵀ = I and det(R) = +1, both within tol.
  bool is_valid(double tol = 1e-6) const;
};

// Rodrigues map: axis-angle vector (radians) to rotation matrix.
Mat3 axis_angle_to_matrix(const Vec3& aa);

// Log map, returning an axis-angle with magnitude in [0, pi].
Vec3 matrix_to_axis_angle(const Mat3& r);

// Wraps the magnitude into [0, 2*pi).
Vec3 canonicalize_axis_angle(const Vec3& aa);

// Partial derivative of the Rodrigues map with respect to component
// `axis` (0..2) of the axis-angle vector; exact, with a series fallback
// near zero.
Mat3 axis_angle_jacobian(const Vec3& aa, int axis);

// First two columns of R, flattened column-major: a continuous 6-number
// rotation encoding for regression targets.
std::array<double, 6> rotation_to_6d(const Mat3& r);

// Gram-Schmidt reconstruction of a rotation from the 6-number encoding.
Mat3 rotation_from_6d(const std::array<double, 6>& v);

// Nearest rotation matrix in Frobenius norm (SVD projection).
Mat3 orthonormalize(const Mat3& m);

// Geodesic angle of a·bᵀ in [0, pi].
double geodesic_angle(const Mat3& a, const Mat3& b);

}  // namespace hoisynth::geom

#endif  // HOISYNTH_GEOM_TRANSFORM_H_
